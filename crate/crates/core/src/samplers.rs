//! The two top-level inference loops - the two-block Gibbs sampler and the
//! Gibbs bouncy particle sampler - plus the trajectory-integral posterior
//! estimators.
//!
//! Both samplers target the same joint posterior over the image and the
//! shrinkage parameters. Gibbs alternates an exact conditional Gaussian draw
//! of the image with an exact conditional redraw of the shrinkage state;
//! Gibbs-BPS keeps the image moving along straight lines, superposing the
//! closed-form bounce clock with an Exp(lambda_ref) velocity-refresh clock
//! and an Exp(eta) clock that redraws the shrinkage state and rebuilds the
//! precision context.

use std::time::{Duration, Instant};

use crate::bps::{
    bounce_coefficients, bounce_time_from_coefficients, reflect, EventKind, ParticleState,
};
use crate::ct::metrics;
use crate::distributions::{fill_std_normal, sample_exponential, RngStream};
use crate::error::{Error, Result};
use crate::gaussian_exact::{CholeskyFactor, DensePrecision};
use crate::model::ForwardModel;
use crate::operators::{apply_precision, DiffOperators, PrecisionContext};
use crate::prior::{refresh_precision, update_shrinkage, HyperParams, ShrinkageState};

/// Per-pixel running integrals of x and x^2 along a trajectory, with a
/// burn-in threshold in trajectory time. Segments are fed in order; the one
/// straddling the threshold is split so only post-burn-in time counts.
#[derive(Debug, Clone)]
pub struct MomentAccumulator {
    total_time: f64,
    burn_in_time: f64,
    sum_x: Vec<f64>,
    sum_x2: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(n: usize, burn_in_time: f64) -> Self {
        MomentAccumulator {
            total_time: 0.0,
            burn_in_time,
            sum_x: vec![0.0; n],
            sum_x2: vec![0.0; n],
        }
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn effective_time(&self) -> f64 {
        (self.total_time - self.burn_in_time).max(0.0)
    }

    /// Add one straight segment: per coordinate
    /// `int_0^s (x + v t) dt   = x s + v s^2 / 2` and
    /// `int_0^s (x + v t)^2 dt = x^2 s + x v s^2 + v^2 s^3 / 3`.
    pub fn accumulate(&mut self, x: &[f64], v: &[f64], s: f64) -> Result<()> {
        if s < 0.0 || !s.is_finite() {
            return Err(Error::domain(format!("segment duration must be non-negative, got {s}")));
        }
        if x.len() != self.sum_x.len() || v.len() != self.sum_x.len() {
            return Err(Error::shape(format!(
                "segment dimension {} / {} does not match accumulator {}",
                x.len(),
                v.len(),
                self.sum_x.len()
            )));
        }
        let t0 = self.total_time;
        self.total_time += s;
        if self.total_time <= self.burn_in_time {
            return Ok(());
        }
        // Clip away any part of the segment before the burn-in boundary.
        let skip = (self.burn_in_time - t0).max(0.0);
        let s_eff = s - skip;
        for i in 0..x.len() {
            let xi = x[i] + v[i] * skip;
            let vi = v[i];
            self.sum_x[i] += xi * s_eff + 0.5 * vi * s_eff * s_eff;
            self.sum_x2[i] +=
                xi * xi * s_eff + xi * vi * s_eff * s_eff + vi * vi * s_eff * s_eff * s_eff / 3.0;
        }
        Ok(())
    }

    /// Merge a second accumulator (independent chain) additively.
    pub fn merge(&mut self, other: &MomentAccumulator) -> Result<()> {
        if other.sum_x.len() != self.sum_x.len() {
            return Err(Error::shape("cannot merge accumulators of different dimension"));
        }
        self.total_time += other.total_time;
        self.burn_in_time += other.burn_in_time;
        for i in 0..self.sum_x.len() {
            self.sum_x[i] += other.sum_x[i];
            self.sum_x2[i] += other.sum_x2[i];
        }
        Ok(())
    }

    /// Time-averaged mean and standard deviation per coordinate.
    pub fn finalize(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let t = self.total_time - self.burn_in_time;
        if !(t > 0.0) {
            return Err(Error::domain(format!(
                "no trajectory time past burn-in (total {}, burn-in {})",
                self.total_time, self.burn_in_time
            )));
        }
        let mean: Vec<f64> = self.sum_x.iter().map(|s| s / t).collect();
        let std = self
            .sum_x2
            .iter()
            .zip(&mean)
            .map(|(s2, m)| (s2 / t - m * m).max(0.0).sqrt())
            .collect();
        Ok((mean, std))
    }
}

/// Wall-clock convergence probe series against a known ground truth.
///
/// Rows are only emitted once the running estimate exists (post burn-in),
/// so the final row agrees exactly with the finalized posterior mean. SSIM
/// is NaN when the image is too small for the 11x11 window.
#[derive(Debug)]
pub struct TraceRecorder {
    truth: Vec<f64>,
    d: usize,
    probe_interval: f64,
    started: Instant,
    rows: Vec<TraceRow>,
}

#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub time_s: f64,
    pub psnr_db: f64,
    pub ssim: f64,
}

impl TraceRecorder {
    /// `probe_interval` is measured in trajectory time for the
    /// continuous-time sampler and in iterations for Gibbs.
    pub fn new(truth: Vec<f64>, d: usize, probe_interval: f64) -> Result<Self> {
        if truth.len() != d * d {
            return Err(Error::shape(format!(
                "truth has {} values, expected {}",
                truth.len(),
                d * d
            )));
        }
        if !(probe_interval > 0.0) {
            return Err(Error::domain(format!(
                "probe interval must be positive, got {probe_interval}"
            )));
        }
        Ok(TraceRecorder {
            truth,
            d,
            probe_interval,
            started: Instant::now(),
            rows: Vec::new(),
        })
    }

    pub fn probe_interval(&self) -> f64 {
        self.probe_interval
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    fn record(&mut self, estimate: &[f64]) {
        let psnr_db = metrics::psnr_slices(&self.truth, estimate).unwrap_or(f64::NAN);
        let ssim = metrics::ssim_rect(&self.truth, estimate, self.d, self.d).unwrap_or(f64::NAN);
        self.rows.push(TraceRow {
            time_s: self.started.elapsed().as_secs_f64(),
            psnr_db,
            ssim,
        });
    }

    /// CSV with header `time_s,psnr_db,ssim`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_s,psnr_db,ssim\n");
        for row in &self.rows {
            out.push_str(&format!("{:.6},{:.6},{:.6}\n", row.time_s, row.psnr_db, row.ssim));
        }
        out
    }
}

/// Streaming record of a Gibbs chain: post-burn-in mean and second-moment
/// sums rather than the raw draws.
#[derive(Debug, Clone)]
pub struct GibbsChainRecord {
    pub iterations: usize,
    pub burn_in: usize,
    kept: usize,
    sum_x: Vec<f64>,
    sum_x2: Vec<f64>,
    pub elapsed: Duration,
}

impl GibbsChainRecord {
    pub fn kept(&self) -> usize {
        self.kept
    }

    /// Merge an independent chain (summing draw statistics).
    pub fn merge(&mut self, other: &GibbsChainRecord) -> Result<()> {
        if other.sum_x.len() != self.sum_x.len() {
            return Err(Error::shape("cannot merge chains of different dimension"));
        }
        self.iterations += other.iterations;
        self.burn_in += other.burn_in;
        self.kept += other.kept;
        for i in 0..self.sum_x.len() {
            self.sum_x[i] += other.sum_x[i];
            self.sum_x2[i] += other.sum_x2[i];
        }
        self.elapsed = self.elapsed.max(other.elapsed);
        Ok(())
    }

    pub fn posterior_mean(&self) -> Vec<f64> {
        self.sum_x.iter().map(|s| s / self.kept as f64).collect()
    }

    pub fn posterior_std(&self) -> Vec<f64> {
        let k = self.kept as f64;
        self.sum_x
            .iter()
            .zip(&self.sum_x2)
            .map(|(s, s2)| (s2 / k - (s / k) * (s / k)).max(0.0).sqrt())
            .collect()
    }
}

/// The two-block Gibbs sampler: alternately draw the image from its exact
/// conditional Gaussian and the shrinkage state from its exact conditional.
/// Fails with a capacity error when the dense Gaussian block cannot be
/// materialized.
pub fn gibbs_run(
    model: &ForwardModel,
    hyper: &HyperParams,
    iters: usize,
    burn_in: usize,
    rng: &mut RngStream,
    mut trace: Option<&mut TraceRecorder>,
) -> Result<GibbsChainRecord> {
    hyper.validate()?;
    if iters == 0 || burn_in >= iters {
        return Err(Error::domain(format!(
            "need iters > burn_in >= 0, got iters = {iters}, burn_in = {burn_in}"
        )));
    }
    let n = model.ncols();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n {
        return Err(Error::shape(format!("model columns {n} do not form a square image")));
    }
    let ops = DiffOperators::new(d)?;
    let mut ctx = PrecisionContext::new(model, ops)?;
    let mut state = ShrinkageState::init(&ops);
    refresh_precision(&mut ctx, &state, hyper)?;

    let started = Instant::now();
    let mut kept = 0usize;
    let mut sum_x = vec![0.0; n];
    let mut sum_x2 = vec![0.0; n];
    let probe_every = trace
        .as_ref()
        .map(|t| (t.probe_interval().round() as usize).max(1));
    for it in 1..=iters {
        // Block 1: x | shrinkage, y.
        let dense = DensePrecision::from_context(&ctx)?;
        let factor: CholeskyFactor = dense.factor()?;
        let x = factor.sample(dense.rhs(), rng);
        // Block 2: shrinkage | x.
        update_shrinkage(&x, &mut state, hyper, &ops, rng)?;
        refresh_precision(&mut ctx, &state, hyper)?;

        if it > burn_in {
            kept += 1;
            for i in 0..n {
                sum_x[i] += x[i];
                sum_x2[i] += x[i] * x[i];
            }
            if let (Some(trace), Some(every)) = (trace.as_deref_mut(), probe_every) {
                if it % every == 0 || it == iters {
                    let mean: Vec<f64> = sum_x.iter().map(|s| s / kept as f64).collect();
                    trace.record(&mean);
                }
            }
        }
    }
    Ok(GibbsChainRecord {
        iterations: iters,
        burn_in,
        kept,
        sum_x,
        sum_x2,
        elapsed: started.elapsed(),
    })
}

/// How a Gibbs-BPS chain is initialized.
///
/// The cold start (origin, unit shrinkage) forces the chain through a long
/// annealing transient on measured problems: the shrinkage rates first
/// collapse while the particle inflates into the null space of A, and the
/// time-weighted estimator is then dominated by that excursion. The warm
/// start removes the transient by descending to a data-consistent image
/// first (Landweber iterations on the normal equations, each costing the
/// same as one bounce event) and drawing the shrinkage state from its exact
/// conditional there.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStrategy {
    /// Landweber warm start with the given iteration count, then one
    /// conditional shrinkage draw at the warm image.
    Warm { landweber_iters: usize },
    /// `x = 0`, unit shrinkage state.
    Cold,
}

impl Default for InitStrategy {
    fn default() -> Self {
        InitStrategy::Warm {
            landweber_iters: 200,
        }
    }
}

/// Event budget and rates for a Gibbs-BPS run.
#[derive(Debug, Clone, Copy)]
pub struct GibbsBpsOptions {
    /// Trajectory length T; None means "run by event count alone".
    pub traj_time: Option<f64>,
    /// Hard cap on the number of events; None means "run to T".
    pub max_events: Option<u64>,
    /// Velocity refresh rate.
    pub lambda_ref: f64,
    /// Shrinkage-update rate.
    pub eta: f64,
    /// Fraction of the budget (time if T is set, else events) discarded as
    /// burn-in.
    pub burn_in_frac: f64,
    pub init: InitStrategy,
}

impl Default for GibbsBpsOptions {
    fn default() -> Self {
        GibbsBpsOptions {
            traj_time: None,
            max_events: Some(600_000),
            lambda_ref: 10.0,
            eta: 100.0,
            burn_in_frac: 0.2,
            init: InitStrategy::default(),
        }
    }
}

/// Deterministic data-consistent starting image: `iters` Landweber sweeps
/// `x <- x + omega A^T (y - A x)` from zero, with `omega = 1 / |A|_2^2`
/// estimated by power iteration. Stays in the row space of A, so no
/// null-space mass is introduced.
pub fn warm_start_image(model: &ForwardModel, iters: usize) -> Vec<f64> {
    let n = model.ncols();
    let m = model.nrows();
    let mut scratch = vec![0.0; m];
    let mut out = vec![0.0; n];
    // Power iteration for the spectral norm of A^T A.
    let mut v = vec![1.0; n];
    let mut norm_sq = 1.0;
    for _ in 0..30 {
        model.apply_normal(&v, &mut scratch, &mut out);
        norm_sq = out.iter().map(|a| a * a).sum::<f64>().sqrt();
        if !(norm_sq > 0.0) {
            return vec![0.0; n];
        }
        for (vi, oi) in v.iter_mut().zip(&out) {
            *vi = oi / norm_sq;
        }
    }
    let omega = 1.0 / norm_sq;
    let mut x = vec![0.0; n];
    let mut residual = vec![0.0; m];
    let mut grad = vec![0.0; n];
    for _ in 0..iters {
        model.apply(&x, &mut residual);
        for (r, y) in residual.iter_mut().zip(model.measurement()) {
            *r = y - *r;
        }
        model.apply_adjoint(&residual, &mut grad);
        for (xi, gi) in x.iter_mut().zip(&grad) {
            *xi += omega * gi;
        }
    }
    x
}

impl GibbsBpsOptions {
    fn validate(&self) -> Result<()> {
        if self.traj_time.is_none() && self.max_events.is_none() {
            return Err(Error::domain("need a trajectory length, an event cap, or both"));
        }
        if let Some(t) = self.traj_time {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::domain(format!("trajectory length must be positive, got {t}")));
            }
        }
        if let Some(e) = self.max_events {
            if e == 0 {
                return Err(Error::domain("event cap must be positive"));
            }
        }
        if !(self.lambda_ref > 0.0) {
            return Err(Error::domain(format!("lambda_ref must be positive, got {}", self.lambda_ref)));
        }
        if !(self.eta > 0.0) {
            return Err(Error::domain(format!("eta must be positive, got {}", self.eta)));
        }
        if !(0.0..1.0).contains(&self.burn_in_frac) {
            return Err(Error::domain(format!(
                "burn-in fraction must lie in [0, 1), got {}",
                self.burn_in_frac
            )));
        }
        Ok(())
    }
}

/// Outcome of a Gibbs-BPS run: the moment accumulator plus event statistics.
#[derive(Debug)]
pub struct GibbsBpsRecord {
    pub moments: MomentAccumulator,
    pub bounces: u64,
    pub refreshes: u64,
    pub gibbs_updates: u64,
    pub events: u64,
    pub total_time: f64,
    /// Trajectory time consumed before accumulation started (nonzero only
    /// for event-count burn-in).
    pub burn_phase_time: f64,
    pub elapsed: Duration,
    /// Precision-context rebuild count; equals `gibbs_updates` plus the
    /// initial build.
    pub context_version: u64,
}

impl GibbsBpsRecord {
    pub fn count(&self, kind: EventKind) -> u64 {
        match kind {
            EventKind::Bounce => self.bounces,
            EventKind::Refresh => self.refreshes,
            EventKind::GibbsUpdate => self.gibbs_updates,
        }
    }

    /// Diagnostics for runs long enough that every event kind should have
    /// fired at least once.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.events >= 1000 {
            for (name, count) in [
                ("bounce", self.bounces),
                ("refresh", self.refreshes),
                ("shrinkage-update", self.gibbs_updates),
            ] {
                if count == 0 {
                    out.push(format!(
                        "no {name} events in {} events over time {:.3e}; rates may be mis-scaled",
                        self.events, self.total_time
                    ));
                }
            }
        }
        out
    }
}

/// The Gibbs-BPS loop. Three independent clocks - closed-form bounce,
/// Exp(lambda_ref) refresh, Exp(eta) shrinkage update - race; the particle
/// advances by the winner's waiting time and exactly one transition fires.
/// The shrinkage state is redrawn from its exact conditional at the new
/// position, so the precision context changes only at those events.
pub fn gibbs_bps_run(
    model: &ForwardModel,
    hyper: &HyperParams,
    opts: &GibbsBpsOptions,
    rng: &mut RngStream,
    mut trace: Option<&mut TraceRecorder>,
) -> Result<GibbsBpsRecord> {
    hyper.validate()?;
    opts.validate()?;
    let n = model.ncols();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n {
        return Err(Error::shape(format!("model columns {n} do not form a square image")));
    }
    let ops = DiffOperators::new(d)?;
    let mut ctx = PrecisionContext::new(model, ops)?;
    let mut state = ShrinkageState::init(&ops);

    // Burn-in bookkeeping: a time threshold when T is given, otherwise an
    // event-count threshold against the cap.
    let horizon = opts.traj_time.unwrap_or(f64::INFINITY);
    let burn_in_time = opts
        .traj_time
        .map(|t| t * opts.burn_in_frac)
        .unwrap_or(0.0);
    let burn_in_events = if opts.traj_time.is_none() {
        (opts.max_events.unwrap() as f64 * opts.burn_in_frac) as u64
    } else {
        0
    };

    let started = Instant::now();
    let mut particle = ParticleState::init(n, rng);
    match opts.init {
        InitStrategy::Cold => {}
        InitStrategy::Warm { landweber_iters } => {
            particle.x = warm_start_image(model, landweber_iters);
            update_shrinkage(&particle.x, &mut state, hyper, &ops, rng)?;
        }
    }
    refresh_precision(&mut ctx, &state, hyper)?;
    let mut acc: Option<MomentAccumulator> = if burn_in_events == 0 {
        Some(MomentAccumulator::new(n, burn_in_time))
    } else {
        None
    };
    let (mut bounces, mut refreshes, mut gibbs_updates) = (0u64, 0u64, 0u64);
    let mut events = 0u64;
    let mut burn_phase_time = 0.0;
    let mut next_probe = trace.as_ref().map(|t| t.probe_interval());

    loop {
        let (c1, c2) = bounce_coefficients(&particle.x, &particle.v, &ctx)?;
        let s_bounce = bounce_time_from_coefficients(c1, c2, rng.uniform_open01())?;
        let s_ref = sample_exponential(opts.lambda_ref, rng)?;
        let s_gibbs = sample_exponential(opts.eta, rng)?;
        let (s, kind) = if s_bounce <= s_ref && s_bounce <= s_gibbs {
            (s_bounce, EventKind::Bounce)
        } else if s_ref <= s_gibbs {
            (s_ref, EventKind::Refresh)
        } else {
            (s_gibbs, EventKind::GibbsUpdate)
        };

        if particle.t + s >= horizon {
            // Truncate the final segment at T and stop.
            let s_trunc = horizon - particle.t;
            if let Some(acc) = acc.as_mut() {
                acc.accumulate(&particle.x, &particle.v, s_trunc)?;
            }
            particle.t = horizon;
            break;
        }

        if let Some(acc) = acc.as_mut() {
            acc.accumulate(&particle.x, &particle.v, s)?;
        }
        for (xi, vi) in particle.x.iter_mut().zip(&particle.v) {
            *xi += vi * s;
        }
        particle.t += s;
        events += 1;

        match kind {
            EventKind::Refresh => {
                refreshes += 1;
                fill_std_normal(&mut particle.v, rng);
            }
            EventKind::Bounce => {
                bounces += 1;
                let mut g = apply_precision(&particle.x, &ctx)?;
                for (gi, ri) in g.iter_mut().zip(ctx.rhs()) {
                    *gi -= ri;
                }
                particle.v = reflect(&particle.v, &g)?;
            }
            EventKind::GibbsUpdate => {
                gibbs_updates += 1;
                update_shrinkage(&particle.x, &mut state, hyper, &ops, rng)?;
                refresh_precision(&mut ctx, &state, hyper)?;
            }
        }

        // Event-count burn-in: start accumulating once past the threshold.
        if acc.is_none() && events >= burn_in_events {
            burn_phase_time = particle.t;
            acc = Some(MomentAccumulator::new(n, 0.0));
        }

        if let (Some(trace), Some(np)) = (trace.as_deref_mut(), next_probe.as_mut()) {
            if particle.t >= *np {
                if let Some(acc) = acc.as_ref() {
                    if let Ok((mean, _)) = acc.finalize() {
                        trace.record(&mean);
                    }
                }
                while *np <= particle.t {
                    *np += trace.probe_interval();
                }
            }
        }

        if let Some(cap) = opts.max_events {
            if events >= cap {
                break;
            }
        }
    }

    let acc = acc.unwrap_or_else(|| MomentAccumulator::new(n, 0.0));
    if let Some(trace) = trace.as_deref_mut() {
        if let Ok((mean, _)) = acc.finalize() {
            trace.record(&mean);
        }
    }
    Ok(GibbsBpsRecord {
        moments: acc,
        bounces,
        refreshes,
        gibbs_updates,
        events,
        total_time: particle.t,
        burn_phase_time,
        elapsed: started.elapsed(),
        context_version: ctx.version(),
    })
}
