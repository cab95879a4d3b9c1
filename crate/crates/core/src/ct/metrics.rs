//! Image-quality metrics: PSNR and mean local SSIM.

use crate::error::{Error, Result};
use crate::grid::ImageGrid;

/// PSNR in decibels with the peak taken from the ground truth, capped at
/// 100 dB (zero MSE would otherwise be infinite).
pub fn psnr_slices(truth: &[f64], estimate: &[f64]) -> Result<f64> {
    if truth.len() != estimate.len() || truth.is_empty() {
        return Err(Error::shape(format!(
            "psnr needs equal non-empty shapes, got {} and {}",
            truth.len(),
            estimate.len()
        )));
    }
    let mse = truth
        .iter()
        .zip(estimate)
        .map(|(t, e)| (t - e) * (t - e))
        .sum::<f64>()
        / truth.len() as f64;
    if mse == 0.0 {
        return Ok(100.0);
    }
    let peak = truth.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    Ok((10.0 * (peak * peak / mse).log10()).min(100.0))
}

pub fn psnr(truth: &ImageGrid, estimate: &ImageGrid) -> Result<f64> {
    if truth.side() != estimate.side() {
        return Err(Error::shape(format!(
            "psnr shapes differ: {0}x{0} vs {1}x{1}",
            truth.side(),
            estimate.side()
        )));
    }
    psnr_slices(truth.values(), estimate.values())
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, wi) in w.iter_mut().enumerate() {
        let d = i as f64 - c;
        *wi = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *wi;
    }
    for wi in w.iter_mut() {
        *wi /= sum;
    }
    w
}

/// Separable valid-region convolution with the normalized Gaussian window:
/// rows first, then columns. Output is (h - 10) x (w - 10).
fn filter_valid(img: &[f64], w: usize, h: usize) -> Vec<f64> {
    let win = gaussian_window();
    let wo = w - SSIM_WINDOW + 1;
    let ho = h - SSIM_WINDOW + 1;
    let mut rows = vec![0.0; h * wo];
    for r in 0..h {
        for c in 0..wo {
            let mut acc = 0.0;
            for k in 0..SSIM_WINDOW {
                acc += win[k] * img[r * w + c + k];
            }
            rows[r * wo + c] = acc;
        }
    }
    let mut out = vec![0.0; ho * wo];
    for r in 0..ho {
        for c in 0..wo {
            let mut acc = 0.0;
            for k in 0..SSIM_WINDOW {
                acc += win[k] * rows[(r + k) * wo + c];
            }
            out[r * wo + c] = acc;
        }
    }
    out
}

/// Mean local SSIM over all fully interior 11x11 Gaussian windows
/// (sigma 1.5, K1 = 0.01, K2 = 0.03), dynamic range taken from the ground
/// truth. Works on rectangular w x h images with min(w, h) >= 11.
pub fn ssim_rect(truth: &[f64], estimate: &[f64], w: usize, h: usize) -> Result<f64> {
    if truth.len() != w * h || estimate.len() != w * h {
        return Err(Error::shape(format!(
            "ssim expects {w}x{h} = {} values, got {} and {}",
            w * h,
            truth.len(),
            estimate.len()
        )));
    }
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::domain(format!(
            "ssim needs at least {SSIM_WINDOW} pixels per side, got {w}x{h}"
        )));
    }
    let peak = truth.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let c1 = (SSIM_K1 * peak) * (SSIM_K1 * peak);
    let c2 = (SSIM_K2 * peak) * (SSIM_K2 * peak);

    let tt: Vec<f64> = truth.iter().map(|v| v * v).collect();
    let ee: Vec<f64> = estimate.iter().map(|v| v * v).collect();
    let te: Vec<f64> = truth.iter().zip(estimate).map(|(a, b)| a * b).collect();

    let mu_t = filter_valid(truth, w, h);
    let mu_e = filter_valid(estimate, w, h);
    let m_tt = filter_valid(&tt, w, h);
    let m_ee = filter_valid(&ee, w, h);
    let m_te = filter_valid(&te, w, h);

    let mut total = 0.0;
    for i in 0..mu_t.len() {
        let (mt, me) = (mu_t[i], mu_e[i]);
        let var_t = m_tt[i] - mt * mt;
        let var_e = m_ee[i] - me * me;
        let cov = m_te[i] - mt * me;
        let num = (2.0 * mt * me + c1) * (2.0 * cov + c2);
        let den = (mt * mt + me * me + c1) * (var_t + var_e + c2);
        total += num / den;
    }
    Ok(total / mu_t.len() as f64)
}

pub fn ssim(truth: &ImageGrid, estimate: &ImageGrid) -> Result<f64> {
    if truth.side() != estimate.side() {
        return Err(Error::shape(format!(
            "ssim shapes differ: {0}x{0} vs {1}x{1}",
            truth.side(),
            estimate.side()
        )));
    }
    ssim_rect(
        truth.values(),
        estimate.values(),
        truth.side(),
        truth.side(),
    )
}
