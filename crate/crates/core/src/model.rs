//! The linear-Gaussian observation model `y = A x + e`.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// System matrix plus everything derived from the measurement: the noise
/// level, the precomputed back-projection `A^T y`, and (on demand) a dense
/// `A^T A` for the exact Gaussian sampler.
///
/// The adjoint is stored as an explicit CSR transpose so that `A^T (A x)`
/// costs two sparse passes; that is the per-event workhorse of the
/// continuous-time sampler.
#[derive(Debug)]
pub struct ForwardModel {
    a: SparseMatrix,
    at: SparseMatrix,
    sigma_obs: f64,
    y: Vec<f64>,
    at_y: Vec<f64>,
    ata: OnceLock<Vec<f64>>,
}

impl ForwardModel {
    /// Wrap a system matrix; the measurement starts out as zero with unit
    /// noise until [`ForwardModel::set_measurement`] is called.
    pub fn new(a: SparseMatrix) -> Self {
        let at = a.transpose();
        let (m, n) = (a.nrows(), a.ncols());
        ForwardModel {
            a,
            at,
            sigma_obs: 1.0,
            y: vec![0.0; m],
            at_y: vec![0.0; n],
            ata: OnceLock::new(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.a.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.a.ncols()
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn sigma_obs(&self) -> f64 {
        self.sigma_obs
    }

    pub fn measurement(&self) -> &[f64] {
        &self.y
    }

    /// `A^T y`, kept in sync with the measurement.
    pub fn at_y(&self) -> &[f64] {
        &self.at_y
    }

    /// Install a measurement vector and noise level; recomputes `A^T y`.
    pub fn set_measurement(&mut self, y: Vec<f64>, sigma_obs: f64) -> Result<()> {
        if y.len() != self.a.nrows() {
            return Err(Error::shape(format!(
                "measurement length {} does not match {} matrix rows",
                y.len(),
                self.a.nrows()
            )));
        }
        if !(sigma_obs > 0.0) || !sigma_obs.is_finite() {
            return Err(Error::domain(format!("sigma_obs must be positive, got {sigma_obs}")));
        }
        self.sigma_obs = sigma_obs;
        let mut at_y = vec![0.0; self.a.ncols()];
        self.at.mul_vec(&y, &mut at_y);
        self.y = y;
        self.at_y = at_y;
        Ok(())
    }

    /// `out = A x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.a.mul_vec(x, out);
    }

    /// `out = A^T w`.
    pub fn apply_adjoint(&self, w: &[f64], out: &mut [f64]) {
        self.at.mul_vec(w, out);
    }

    /// `out = A^T (A x)`, two sparse passes through `scratch` (length m).
    pub fn apply_normal(&self, x: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        self.a.mul_vec(x, scratch);
        self.at.mul_vec(scratch, out);
    }

    /// Dense row-major `A^T A`, built lazily and cached. Only the dense
    /// Gaussian sampler should call this; its capacity guard runs first.
    pub fn dense_ata(&self) -> &[f64] {
        self.ata.get_or_init(|| {
            let n = self.a.ncols();
            let mut ata = vec![0.0; n * n];
            for r in 0..self.a.nrows() {
                let entries: Vec<(usize, f64)> = self.a.row(r).collect();
                for &(i, vi) in &entries {
                    let base = i * n;
                    for &(j, vj) in &entries {
                        ata[base + j] += vi * vj;
                    }
                }
            }
            ata
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn at_y_tracks_measurement() {
        let a = SparseMatrix::from_rows(2, 2, vec![vec![(0, 2.0)], vec![(0, 1.0), (1, 3.0)]])
            .unwrap();
        let mut model = ForwardModel::new(a);
        model.set_measurement(vec![1.0, 2.0], 0.5).unwrap();
        assert_eq!(model.at_y(), &[4.0, 6.0]);
        model.set_measurement(vec![0.0, 1.0], 0.5).unwrap();
        assert_eq!(model.at_y(), &[1.0, 3.0]);
    }

    #[test]
    fn normal_application_matches_dense_ata() {
        let a = SparseMatrix::from_rows(
            3,
            2,
            vec![vec![(0, 1.0), (1, 2.0)], vec![(1, -1.0)], vec![(0, 0.5)]],
        )
        .unwrap();
        let model = ForwardModel::new(a);
        let x = [1.5, -2.0];
        let mut scratch = vec![0.0; 3];
        let mut out = vec![0.0; 2];
        model.apply_normal(&x, &mut scratch, &mut out);

        let ata = model.dense_ata();
        let want = [
            ata[0] * x[0] + ata[1] * x[1],
            ata[2] * x[0] + ata[3] * x[1],
        ];
        assert!((out[0] - want[0]).abs() < 1e-12);
        assert!((out[1] - want[1]).abs() < 1e-12);
    }
}
