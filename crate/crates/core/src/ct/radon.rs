//! Discretized parallel-beam Radon transform over the [-1, 1]^2 pixel grid.
//!
//! Each matrix row holds the exact intersection lengths of one ray with the
//! grid cells, computed by an incremental Siddon-type traversal. Rays are
//! parameterized as `p(t) = s theta + t theta_perp` with
//! `theta = (cos phi, sin phi)`; angles are equispaced on [0, pi) and the
//! detector array has one element per pixel column (pitch 2/d, spanning
//! [-1, 1]).

use crate::error::{Error, Result};
use crate::model::ForwardModel;
use crate::sparse::SparseMatrix;

/// Detector offsets for a d-element array at pixel pitch.
pub fn detector_offsets(d: usize) -> Vec<f64> {
    (0..d).map(|j| -1.0 + (j as f64 + 0.5) * 2.0 / d as f64).collect()
}

/// Projection angles `k pi / n_angles`.
pub fn projection_angles(n_angles: usize) -> Vec<f64> {
    (0..n_angles)
        .map(|k| k as f64 * std::f64::consts::PI / n_angles as f64)
        .collect()
}

/// Entry/exit parameters of the ray through the [-1, 1]^2 box, or None if
/// it misses.
fn box_clip(p0: (f64, f64), u: (f64, f64)) -> Option<(f64, f64)> {
    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    for (p, du) in [(p0.0, u.0), (p0.1, u.1)] {
        if du.abs() < 1e-14 {
            if !(-1.0..=1.0).contains(&p) {
                return None;
            }
        } else {
            let t0 = (-1.0 - p) / du;
            let t1 = (1.0 - p) / du;
            t_enter = t_enter.max(t0.min(t1));
            t_exit = t_exit.min(t0.max(t1));
        }
    }
    (t_enter < t_exit).then_some((t_enter, t_exit))
}

/// Intersection lengths of one ray with the d x d grid, as
/// (flat row-major pixel index, length) pairs.
fn trace_ray(d: usize, angle: f64, offset: f64) -> Vec<(u32, f64)> {
    let (sin, cos) = angle.sin_cos();
    let p0 = (offset * cos, offset * sin);
    let u = (-sin, cos);
    let Some((t_enter, t_exit)) = box_clip(p0, u) else {
        return Vec::new();
    };
    let h = 2.0 / d as f64;
    let last = d as i64 - 1;
    let to_cell = |coord: f64| -> i64 { (((coord + 1.0) / h).floor() as i64).clamp(0, last) };

    let eps = 1e-12;
    let mut ix = to_cell(p0.0 + (t_enter + eps) * u.0);
    let mut iy = to_cell(p0.1 + (t_enter + eps) * u.1);

    let next_boundary = |cell: i64, du: f64, p: f64| -> f64 {
        if du > 1e-14 {
            ((-1.0 + (cell + 1) as f64 * h) - p) / du
        } else if du < -1e-14 {
            ((-1.0 + cell as f64 * h) - p) / du
        } else {
            f64::INFINITY
        }
    };

    let mut t = t_enter;
    let mut out = Vec::with_capacity(2 * d);
    loop {
        let tx = next_boundary(ix, u.0, p0.0);
        let ty = next_boundary(iy, u.1, p0.1);
        let t_next = tx.min(ty).min(t_exit);
        let len = t_next - t;
        if len > 1e-14 {
            // Geometric iy counts from the bottom (y = -1); image rows count
            // from the top.
            let row = (last - iy) as u32;
            out.push((row * d as u32 + ix as u32, len));
        }
        if t_next >= t_exit - 1e-14 {
            break;
        }
        if tx <= ty {
            ix += if u.0 > 0.0 { 1 } else { -1 };
        } else {
            iy += if u.1 > 0.0 { 1 } else { -1 };
        }
        if ix < 0 || ix > last || iy < 0 || iy > last {
            break;
        }
        t = t_next;
    }
    out
}

/// Assemble the forward model for `n_angles` equispaced projections with d
/// detectors each (rows ordered angle-major).
pub fn build_radon(d: usize, n_angles: usize) -> Result<ForwardModel> {
    if d < 2 {
        return Err(Error::domain(format!("grid side must be at least 2, got {d}")));
    }
    if n_angles < 1 {
        return Err(Error::domain(format!("need at least one projection angle, got {n_angles}")));
    }
    let offsets = detector_offsets(d);
    let mut rows = Vec::with_capacity(n_angles * d);
    for angle in projection_angles(n_angles) {
        for &s in &offsets {
            rows.push(trace_ray(d, angle, s));
        }
    }
    let a = SparseMatrix::from_rows(n_angles * d, d * d, rows)?;
    Ok(ForwardModel::new(a))
}

/// Chord length of a ray through the [-1, 1]^2 box (oracle for
/// mass-conservation checks).
pub fn chord_length(d_unused: usize, angle: f64, offset: f64) -> f64 {
    let _ = d_unused;
    let (sin, cos) = angle.sin_cos();
    match box_clip((offset * cos, offset * sin), (-sin, cos)) {
        Some((t0, t1)) => t1 - t0,
        None => 0.0,
    }
}
