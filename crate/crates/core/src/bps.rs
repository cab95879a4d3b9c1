//! Bouncy-particle-sampler kernel for Gaussian potentials.
//!
//! For a quadratic potential the bounce rate along a straight segment is the
//! positive part of a linear function, so the inhomogeneous-Poisson arrival
//! time inverts in closed form - no thinning, no upper bounds. The kernel is
//! generic over [`GaussianTarget`] so it runs both against the matrix-free
//! conditional precision of the image model and against small dense
//! precisions in tests.

use crate::distributions::{fill_std_normal, sample_exponential, RngStream};
use crate::error::{Error, Result};
use crate::gaussian_exact::DensePrecision;
use crate::operators::{self, PrecisionContext};

/// A Gaussian target specified through its precision action and linear term:
/// `U(x) = x^T L x / 2 - x^T rhs` up to a constant, so `grad U = L x - rhs`
/// and the mean solves `L mu = rhs`.
pub trait GaussianTarget {
    fn dim(&self) -> usize;

    /// `L x`.
    fn apply_precision(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// `rhs = L mu`.
    fn rhs(&self) -> &[f64];

    fn grad_potential(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.apply_precision(x)?;
        for (gi, ri) in g.iter_mut().zip(self.rhs()) {
            *gi -= ri;
        }
        Ok(g)
    }

    /// Potential up to its constant; differences are exact.
    fn potential(&self, x: &[f64]) -> Result<f64> {
        let lx = self.apply_precision(x)?;
        let quad: f64 = x.iter().zip(&lx).map(|(a, b)| a * b).sum();
        let lin: f64 = x.iter().zip(self.rhs()).map(|(a, b)| a * b).sum();
        Ok(0.5 * quad - lin)
    }
}

impl GaussianTarget for PrecisionContext<'_> {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply_precision(&self, x: &[f64]) -> Result<Vec<f64>> {
        operators::apply_precision(x, self)
    }

    fn rhs(&self) -> &[f64] {
        PrecisionContext::rhs(self)
    }
}

impl GaussianTarget for DensePrecision {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply_precision(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        if x.len() != n {
            return Err(Error::shape(format!("expected vector of length {n}, got {}", x.len())));
        }
        let m = self.matrix();
        Ok((0..n)
            .map(|i| m[i * n..(i + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    fn rhs(&self) -> &[f64] {
        DensePrecision::rhs(self)
    }
}

/// Position, velocity, and accumulated trajectory time of the particle.
#[derive(Debug, Clone)]
pub struct ParticleState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

impl ParticleState {
    /// Conventional start: the origin with a fresh standard-normal velocity.
    pub fn init(n: usize, rng: &mut RngStream) -> Self {
        let mut v = vec![0.0; n];
        fill_std_normal(&mut v, rng);
        ParticleState {
            x: vec![0.0; n],
            v,
            t: 0.0,
        }
    }
}

/// What ended a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Bounce,
    Refresh,
    GibbsUpdate,
}

/// An event together with its realized waiting time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub kind: EventKind,
    pub s: f64,
}

/// One straight stretch of trajectory: position `x_start + t v` for
/// `t in [0, s]`.
#[derive(Debug, Clone)]
pub struct TrajectorySegment {
    pub x_start: Vec<f64>,
    pub v: Vec<f64>,
    pub s: f64,
}

/// The two inner products the bounce-time formula needs:
/// `c1 = <v, grad U(x)>` and `c2 = v^T L v`, obtained from a single
/// precision application (on v).
pub fn bounce_coefficients<T: GaussianTarget + ?Sized>(
    x: &[f64],
    v: &[f64],
    target: &T,
) -> Result<(f64, f64)> {
    let lv = target.apply_precision(v)?;
    let c1_quad: f64 = x.iter().zip(&lv).map(|(a, b)| a * b).sum();
    let c1_lin: f64 = target.rhs().iter().zip(v).map(|(a, b)| a * b).sum();
    let c2: f64 = v.iter().zip(&lv).map(|(a, b)| a * b).sum();
    Ok((c1_quad - c1_lin, c2))
}

/// Closed-form first-arrival time of the bounce clock with rate
/// `(c1 + c2 t)_+`:
///
/// ```text
/// s = (-c1 + sqrt((c1)_+^2 - 2 c2 ln u)) / c2
/// ```
pub fn bounce_time_from_coefficients(c1: f64, c2: f64, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::domain(format!("uniform draw must lie in (0,1), got {u}")));
    }
    if !c1.is_finite() || !c2.is_finite() || c2 <= 0.0 {
        return Err(Error::state(format!(
            "bounce coefficients invalid: c1 = {c1}, c2 = {c2}"
        )));
    }
    let c1_pos = c1.max(0.0);
    // Rounding can push the discriminant a hair negative when u -> 1.
    let disc = (c1_pos * c1_pos - 2.0 * c2 * u.ln()).max(0.0);
    Ok((-c1 + disc.sqrt()) / c2)
}

/// Bounce time at state (x, v) for a Gaussian target, driven by an explicit
/// uniform draw.
pub fn bounce_time_gaussian<T: GaussianTarget + ?Sized>(
    x: &[f64],
    v: &[f64],
    target: &T,
    u: f64,
) -> Result<f64> {
    let (c1, c2) = bounce_coefficients(x, v, target)?;
    bounce_time_from_coefficients(c1, c2, u)
}

/// Householder-type reflection of `v` across the hyperplane orthogonal to
/// `grad`: `v - 2 (v . g / |g|^2) g`.
pub fn reflect(v: &[f64], grad: &[f64]) -> Result<Vec<f64>> {
    if v.len() != grad.len() {
        return Err(Error::shape(format!(
            "velocity has length {}, gradient {}",
            v.len(),
            grad.len()
        )));
    }
    let norm_sq: f64 = grad.iter().map(|g| g * g).sum();
    if norm_sq < 1e-60 {
        return Err(Error::state("degenerate gradient: cannot reflect"));
    }
    let scale = 2.0 * v.iter().zip(grad).map(|(a, b)| a * b).sum::<f64>() / norm_sq;
    Ok(v.iter().zip(grad).map(|(vi, gi)| vi - scale * gi).collect())
}

/// The standalone BPS loop against a fixed Gaussian target: closed-form
/// bounce times superposed with an Exp(lambda_ref) refresh clock. Runs until
/// the accumulated trajectory time would exceed `total_time`; the final
/// segment is truncated to end exactly at `total_time`.
pub fn bps_gaussian_run<T: GaussianTarget + ?Sized>(
    target: &T,
    total_time: f64,
    lambda_ref: f64,
    rng: &mut RngStream,
) -> Result<Vec<TrajectorySegment>> {
    if !(total_time > 0.0) {
        return Err(Error::domain(format!("trajectory length must be positive, got {total_time}")));
    }
    if !(lambda_ref > 0.0) {
        return Err(Error::domain(format!("refresh rate must be positive, got {lambda_ref}")));
    }
    let n = target.dim();
    let mut state = ParticleState::init(n, rng);
    let mut segments = Vec::new();
    loop {
        let u = rng.uniform_open01();
        let s_bounce = bounce_time_gaussian(&state.x, &state.v, target, u)?;
        let s_ref = sample_exponential(lambda_ref, rng)?;
        let (s, kind) = if s_bounce <= s_ref {
            (s_bounce, EventKind::Bounce)
        } else {
            (s_ref, EventKind::Refresh)
        };
        if state.t + s >= total_time {
            segments.push(TrajectorySegment {
                x_start: state.x.clone(),
                v: state.v.clone(),
                s: total_time - state.t,
            });
            return Ok(segments);
        }
        segments.push(TrajectorySegment {
            x_start: state.x.clone(),
            v: state.v.clone(),
            s,
        });
        for (xi, vi) in state.x.iter_mut().zip(&state.v) {
            *xi += vi * s;
        }
        state.t += s;
        match kind {
            EventKind::Refresh => fill_std_normal(&mut state.v, rng),
            EventKind::Bounce => {
                let g = target.grad_potential(&state.x)?;
                state.v = reflect(&state.v, &g)?;
            }
            EventKind::GibbsUpdate => unreachable!(),
        }
    }
}
