//! Minimal CSR sparse matrix, sized for system matrices whose rows are
//! ray-pixel intersection patterns.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Build from per-row `(column, value)` lists.
    pub fn from_rows(nrows: usize, ncols: usize, rows: Vec<Vec<(u32, f64)>>) -> Result<Self> {
        if rows.len() != nrows {
            return Err(Error::shape(format!(
                "expected {nrows} rows, got {}",
                rows.len()
            )));
        }
        if ncols > u32::MAX as usize {
            return Err(Error::shape(format!("column count {ncols} exceeds u32 range")));
        }
        let nnz = rows.iter().map(Vec::len).sum();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                if c as usize >= ncols {
                    return Err(Error::shape(format!("column {c} out of range (ncols = {ncols})")));
                }
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(SparseMatrix {
            nrows,
            ncols,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    /// Dense identity stored sparsely; handy for small test models.
    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            cols: (0..n as u32).collect(),
            vals: vec![1.0; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()]
            .iter()
            .zip(&self.vals[span])
            .map(|(&c, &v)| (c as usize, v))
    }

    /// `out = A x`.
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(out.len(), self.nrows);
        for i in 0..self.nrows {
            let span = self.row_ptr[i]..self.row_ptr[i + 1];
            let mut acc = 0.0;
            for (c, v) in self.cols[span.clone()].iter().zip(&self.vals[span]) {
                acc += v * x[*c as usize];
            }
            out[i] = acc;
        }
    }

    /// Explicit transpose (counting sort by column), used so the adjoint can
    /// also be applied as a row-major CSR product.
    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.cols {
            counts[c as usize + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut cols = vec![0u32; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        let mut next = counts;
        for i in 0..self.nrows {
            let span = self.row_ptr[i]..self.row_ptr[i + 1];
            for (c, v) in self.cols[span.clone()].iter().zip(&self.vals[span]) {
                let slot = next[*c as usize];
                cols[slot] = i as u32;
                vals[slot] = *v;
                next[*c as usize] += 1;
            }
        }
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            cols,
            vals,
        }
    }

    /// Densify row-major; intended for small oracles and the dense Gaussian
    /// sampler only.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.nrows * self.ncols];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                dense[i * self.ncols + j] += v;
            }
        }
        dense
    }
}
