//! Synthetic parallel-beam CT: phantoms, the discretized Radon forward
//! matrix, noise injection, and image-quality metrics.

pub mod metrics;
pub mod phantom;
pub mod radon;

pub use metrics::{psnr, psnr_slices, ssim, ssim_rect};
pub use phantom::{phantom_grains, phantom_shepp_logan};
pub use radon::{build_radon, chord_length, detector_offsets, projection_angles};

use crate::distributions::{fill_std_normal, RngStream};
use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::model::ForwardModel;

/// How the noise standard deviation is tied to the clean data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    /// `sigma = level * |A x|_inf`
    InfNorm,
    /// `sigma = level * |A x|_2 / sqrt(m)`
    Rms,
}

/// Stacked projection measurements, one row per angle.
#[derive(Debug, Clone)]
pub struct Sinogram {
    pub y: Vec<f64>,
    pub n_angles: usize,
    pub n_detectors: usize,
    pub sigma_obs: f64,
}

impl Sinogram {
    pub fn new(y: Vec<f64>, n_angles: usize, n_detectors: usize, sigma_obs: f64) -> Result<Self> {
        if y.len() != n_angles * n_detectors {
            return Err(Error::shape(format!(
                "sinogram of {n_angles} x {n_detectors} needs {} values, got {}",
                n_angles * n_detectors,
                y.len()
            )));
        }
        Ok(Sinogram {
            y,
            n_angles,
            n_detectors,
            sigma_obs,
        })
    }
}

/// Simulate `y = A x + e` with `e ~ N(0, sigma^2 I)`, the noise level tied
/// to the clean projections by `mode`. Installs `y` and `sigma` into the
/// model (updating `A^T y`) and returns the sinogram.
pub fn simulate_measurement(
    model: &mut ForwardModel,
    truth: &ImageGrid,
    mode: NoiseMode,
    noise_level: f64,
    n_angles: usize,
    rng: &mut RngStream,
) -> Result<Sinogram> {
    if !(noise_level > 0.0) || !noise_level.is_finite() {
        return Err(Error::domain(format!("noise level must be positive, got {noise_level}")));
    }
    if truth.len() != model.ncols() {
        return Err(Error::shape(format!(
            "truth has {} pixels but the model has {} columns",
            truth.len(),
            model.ncols()
        )));
    }
    let m = model.nrows();
    if n_angles == 0 || m % n_angles != 0 {
        return Err(Error::shape(format!(
            "row count {m} is not divisible into {n_angles} angles"
        )));
    }
    let mut clean = vec![0.0; m];
    model.apply(truth.values(), &mut clean);
    let sigma = match mode {
        NoiseMode::InfNorm => {
            noise_level * clean.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
        }
        NoiseMode::Rms => {
            noise_level * (clean.iter().map(|v| v * v).sum::<f64>() / m as f64).sqrt()
        }
    };
    if !(sigma > 0.0) {
        return Err(Error::state("clean projections are identically zero; cannot set a noise level"));
    }
    let mut noise = vec![0.0; m];
    fill_std_normal(&mut noise, rng);
    let y: Vec<f64> = clean
        .iter()
        .zip(&noise)
        .map(|(c, e)| c + sigma * e)
        .collect();
    model.set_measurement(y.clone(), sigma)?;
    Sinogram::new(y, n_angles, m / n_angles, sigma)
}
