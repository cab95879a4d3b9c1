//! The fused L1/2 prior hierarchy: Gibbs updates of the global rates
//! (lambda) and local scales (tau^2) for all three blocks - pixels,
//! horizontal increments, vertical increments.
//!
//! The prior exponent per block is `alpha = 2^-gamma`; for such exponents
//! the exponential-power density is a Gaussian scale mixture whose local
//! scales admit an exact inverse-Gaussian sampling ladder, so no rejection
//! steps are needed anywhere.

use crate::distributions::{sample_gamma, sample_inverse_gaussian, RngStream};
use crate::error::{Error, Result};
use crate::operators::{apply_diff_h, apply_diff_v, DiffOperators, PrecisionContext};

/// |x| below this is clamped before forming inverse-Gaussian mean
/// parameters (which diverge at exactly zero); the resulting draw is a
/// near-degenerate heavy shrinkage, the correct limiting behavior.
pub const ZERO_PIXEL_CLAMP: f64 = 1e-12;

/// Local scales are clamped to this range after every draw so the
/// conditional precision stays numerically SPD.
pub const TAU2_RANGE: (f64, f64) = (1e-16, 1e16);

/// Prior hyperparameters: block exponents `alpha_1 = 2^-gamma1` (pixels)
/// and `alpha_2 = 2^-gamma2` (both increment blocks), plus Gamma(a, b)
/// hyperpriors for the three global rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub gamma1: u32,
    pub gamma2: u32,
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
    pub a3: f64,
    pub b3: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            gamma1: 1,
            gamma2: 1,
            a1: 1.0,
            b1: 1.0,
            a2: 1.0,
            b2: 1.0,
            a3: 1.0,
            b3: 1.0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a1", self.a1),
            ("b1", self.b1),
            ("a2", self.a2),
            ("b2", self.b2),
            ("a3", self.a3),
            ("b3", self.b3),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(format!("hyperparameter {name} must be positive, got {v}")));
            }
        }
        // 2^(gamma+1) must stay in f64 exponent range with room to spare.
        if self.gamma1 > 16 || self.gamma2 > 16 {
            return Err(Error::domain("gamma exponents above 16 are not supported"));
        }
        Ok(())
    }
}

/// Global rates and local scale fields of the three shrinkage blocks.
#[derive(Debug, Clone)]
pub struct ShrinkageState {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub tau2: Vec<f64>,
    pub tau2_h: Vec<f64>,
    pub tau2_v: Vec<f64>,
}

impl ShrinkageState {
    /// Conventional cold start: unit rates and unit scales.
    pub fn init(ops: &DiffOperators) -> Self {
        ShrinkageState {
            lambda1: 1.0,
            lambda2: 1.0,
            lambda3: 1.0,
            tau2: vec![1.0; ops.n()],
            tau2_h: vec![1.0; ops.n_increments()],
            tau2_v: vec![1.0; ops.n_increments()],
        }
    }
}

/// `|x|^(1/2^gamma)` by repeated square roots.
#[inline]
pub fn root_pow2(x: f64, gamma: u32) -> f64 {
    let mut r = x.abs();
    for _ in 0..gamma {
        r = r.sqrt();
    }
    r
}

/// One Gamma draw for a global rate given its block of values:
/// shape `2^gamma * len + a`, rate `sum |v_i|^(1/2^gamma) + b`.
pub fn sample_global_lambda(
    values: &[f64],
    gamma: u32,
    a: f64,
    b: f64,
    rng: &mut RngStream,
) -> Result<f64> {
    let shape = (1u64 << gamma) as f64 * values.len() as f64 + a;
    let rate = values.iter().map(|&v| root_pow2(v, gamma)).sum::<f64>() + b;
    sample_gamma(shape, rate, rng)
}

/// Draw the local scale ladder for one site. Returns tau^2 (unclamped).
fn sample_site_tau2(abs_x: f64, lambda: f64, gamma: u32, rng: &mut RngStream) -> Result<f64> {
    let x = abs_x.max(ZERO_PIXEL_CLAMP);
    if gamma == 0 {
        let w = sample_inverse_gaussian(1.0 / (lambda * x), 1.0, rng)?;
        return Ok(1.0 / w);
    }
    // Top rung: 1/v^gamma ~ IG(1 / (2 lambda |x|^(1/2^gamma)), 1/2).
    let mut v_next = 1.0 / sample_inverse_gaussian(1.0 / (2.0 * lambda * root_pow2(x, gamma)), 0.5, rng)?;
    // Middle rungs l = gamma-1 .. 1:
    // 1/v^l ~ IG(1 / (2 v^{l+1} lambda |x|^(1/2^l)), 1 / (2 (v^{l+1})^2)).
    for l in (1..gamma).rev() {
        let mean = 1.0 / (2.0 * v_next * lambda * root_pow2(x, l));
        let shape = 1.0 / (2.0 * v_next * v_next);
        v_next = 1.0 / sample_inverse_gaussian(mean, shape, rng)?;
    }
    // Final rung: 1/tau^2 ~ IG(1 / (lambda^(2^gamma) v^1 |x|), 1 / (v^1)^2).
    let lambda_pow = lambda.powi(1i32 << gamma);
    let mean = 1.0 / (lambda_pow * v_next * x);
    let shape = 1.0 / (v_next * v_next);
    let w = sample_inverse_gaussian(mean, shape, rng)?;
    Ok(1.0 / w)
}

/// Draw the whole tau^2 field for one block, independently per site.
pub fn sample_local_tau_block(
    values: &[f64],
    lambda: f64,
    gamma: u32,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!("lambda must be positive, got {lambda}")));
    }
    let (lo, hi) = TAU2_RANGE;
    values
        .iter()
        .map(|&v| sample_site_tau2(v.abs(), lambda, gamma, rng).map(|t| t.clamp(lo, hi)))
        .collect()
}

/// One full conditional redraw of the shrinkage parameters given the image:
/// pixel block from x itself, the two increment blocks from the horizontal
/// and vertical first differences. The three blocks are mutually
/// independent given x.
pub fn update_shrinkage(
    x: &[f64],
    state: &mut ShrinkageState,
    hyper: &HyperParams,
    ops: &DiffOperators,
    rng: &mut RngStream,
) -> Result<()> {
    state.lambda1 = sample_global_lambda(x, hyper.gamma1, hyper.a1, hyper.b1, rng)?;
    state.tau2 = sample_local_tau_block(x, state.lambda1, hyper.gamma1, rng)?;

    let dh = apply_diff_h(ops, x)?;
    state.lambda2 = sample_global_lambda(&dh, hyper.gamma2, hyper.a2, hyper.b2, rng)?;
    state.tau2_h = sample_local_tau_block(&dh, state.lambda2, hyper.gamma2, rng)?;

    let dv = apply_diff_v(ops, x)?;
    state.lambda3 = sample_global_lambda(&dv, hyper.gamma2, hyper.a3, hyper.b3, rng)?;
    state.tau2_v = sample_local_tau_block(&dv, state.lambda3, hyper.gamma2, rng)?;
    Ok(())
}

/// Push the current shrinkage state into a precision context: diagonal
/// entries `lambda^(2^(gamma+1)) / tau^2` per site.
pub fn refresh_precision(
    ctx: &mut PrecisionContext,
    state: &ShrinkageState,
    hyper: &HyperParams,
) -> Result<()> {
    let pow1 = state.lambda1.powi(1i32 << (hyper.gamma1 + 1));
    let pow2 = state.lambda2.powi(1i32 << (hyper.gamma2 + 1));
    let pow3 = state.lambda3.powi(1i32 << (hyper.gamma2 + 1));
    let ld = state.tau2.iter().map(|t| pow1 / t).collect();
    let lh = state.tau2_h.iter().map(|t| pow2 / t).collect();
    let lv = state.tau2_v.iter().map(|t| pow3 / t).collect();
    ctx.set_diagonals(ld, lh, lv)
}
