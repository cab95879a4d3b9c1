use crate::error::{Error, Result};

/// A d x d image stored flat in row-major order: pixel (i, j) (1-based row,
/// column) lives at index (i-1)*d + (j-1).
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    d: usize,
    values: Vec<f64>,
}

impl ImageGrid {
    pub fn new(d: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != d * d {
            return Err(Error::shape(format!(
                "image of side {d} needs {} values, got {}",
                d * d,
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::state("image contains non-finite values"));
        }
        Ok(ImageGrid { d, values })
    }

    pub fn zeros(d: usize) -> Self {
        ImageGrid {
            d,
            values: vec![0.0; d * d],
        }
    }

    pub fn side(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Pixel accessor with 0-based (row, col).
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.d + col]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
