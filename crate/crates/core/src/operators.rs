//! Image-domain structured linear operators: first-difference matrices, the
//! matrix-free GMRF precision application, and the gradient of the
//! conditional Gaussian potential.
//!
//! Images are row-major (see [`ImageGrid`]): pixel (i, j) sits at
//! `(i-1)*d + (j-1)`. Horizontal increments difference along j (within a
//! row), vertical increments along i. Both increment vectors have length
//! d*(d-1); horizontal entries are ordered row-by-row, vertical entries
//! difference-row by difference-row.

use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::model::ForwardModel;
use crate::sparse::SparseMatrix;

/// The (d-1) x d bidiagonal first-difference matrix: row k holds -1 at
/// column k and +1 at column k+1.
pub fn build_difference_matrix(d: usize) -> Result<SparseMatrix> {
    if d < 2 {
        return Err(Error::domain(format!("difference matrix needs d >= 2, got {d}")));
    }
    let rows = (0..d - 1)
        .map(|k| vec![(k as u32, -1.0), (k as u32 + 1, 1.0)])
        .collect();
    SparseMatrix::from_rows(d - 1, d, rows)
}

/// Matrix-free difference operators on a d x d grid.
#[derive(Debug, Clone, Copy)]
pub struct DiffOperators {
    d: usize,
}

impl DiffOperators {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::domain(format!("difference operators need d >= 2, got {d}")));
        }
        Ok(DiffOperators { d })
    }

    pub fn side(&self) -> usize {
        self.d
    }

    /// Pixel count n = d^2.
    pub fn n(&self) -> usize {
        self.d * self.d
    }

    /// Increment count per direction, d*(d-1).
    pub fn n_increments(&self) -> usize {
        self.d * (self.d - 1)
    }

    fn check_image(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::shape(format!(
                "expected image of length {}, got {}",
                self.n(),
                x.len()
            )));
        }
        Ok(())
    }

    /// Horizontal increments x_{i,j} - x_{i,j-1}.
    pub fn apply_h(&self, x: &[f64], out: &mut [f64]) {
        let d = self.d;
        debug_assert_eq!(x.len(), d * d);
        debug_assert_eq!(out.len(), d * (d - 1));
        for i in 0..d {
            let row = &x[i * d..(i + 1) * d];
            let dst = &mut out[i * (d - 1)..(i + 1) * (d - 1)];
            for j in 1..d {
                dst[j - 1] = row[j] - row[j - 1];
            }
        }
    }

    /// Vertical increments x_{i,j} - x_{i-1,j}.
    pub fn apply_v(&self, x: &[f64], out: &mut [f64]) {
        let d = self.d;
        debug_assert_eq!(x.len(), d * d);
        debug_assert_eq!(out.len(), d * (d - 1));
        for i in 1..d {
            let above = &x[(i - 1) * d..i * d];
            let here = &x[i * d..(i + 1) * d];
            let dst = &mut out[(i - 1) * d..i * d];
            for j in 0..d {
                dst[j] = here[j] - above[j];
            }
        }
    }

    /// Adjoint scatter of the horizontal operator: `out += D_h^T w`.
    pub fn add_adjoint_h(&self, w: &[f64], out: &mut [f64]) {
        let d = self.d;
        debug_assert_eq!(w.len(), d * (d - 1));
        debug_assert_eq!(out.len(), d * d);
        for i in 0..d {
            let src = &w[i * (d - 1)..(i + 1) * (d - 1)];
            let dst = &mut out[i * d..(i + 1) * d];
            for j in 1..d {
                let v = src[j - 1];
                dst[j - 1] -= v;
                dst[j] += v;
            }
        }
    }

    /// Adjoint scatter of the vertical operator: `out += D_v^T w`.
    pub fn add_adjoint_v(&self, w: &[f64], out: &mut [f64]) {
        let d = self.d;
        debug_assert_eq!(w.len(), d * (d - 1));
        debug_assert_eq!(out.len(), d * d);
        for i in 1..d {
            let src = &w[(i - 1) * d..i * d];
            for j in 0..d {
                let v = src[j];
                out[(i - 1) * d + j] -= v;
                out[i * d + j] += v;
            }
        }
    }
}

/// All horizontal increments of a flat image, shape-checked.
pub fn apply_diff_h(ops: &DiffOperators, x: &[f64]) -> Result<Vec<f64>> {
    ops.check_image(x)?;
    let mut out = vec![0.0; ops.n_increments()];
    ops.apply_h(x, &mut out);
    Ok(out)
}

/// All vertical increments of a flat image, shape-checked.
pub fn apply_diff_v(ops: &DiffOperators, x: &[f64]) -> Result<Vec<f64>> {
    ops.check_image(x)?;
    let mut out = vec![0.0; ops.n_increments()];
    ops.apply_v(x, &mut out);
    Ok(out)
}

/// Everything needed to apply the conditional Gaussian precision
///
/// ```text
/// L = A^T A / sigma^2 + Lambda + D_h^T Lambda_h D_h + D_v^T Lambda_v D_v
/// ```
///
/// matrix-free. The diagonal fields store precision contributions
/// (`lambda^(2/alpha) / tau^2` per site) and are refreshed in place on each
/// shrinkage update; `version` counts those refreshes.
#[derive(Debug)]
pub struct PrecisionContext<'a> {
    forward: &'a ForwardModel,
    ops: DiffOperators,
    sigma_obs: f64,
    rhs: Vec<f64>,
    lambda_diag: Vec<f64>,
    lambda_h_diag: Vec<f64>,
    lambda_v_diag: Vec<f64>,
    version: u64,
}

impl<'a> PrecisionContext<'a> {
    /// Start from unit diagonal fields (the conventional cold start).
    pub fn new(forward: &'a ForwardModel, ops: DiffOperators) -> Result<Self> {
        let n = ops.n();
        if forward.ncols() != n {
            return Err(Error::shape(format!(
                "forward model has {} columns but the grid has {} pixels",
                forward.ncols(),
                n
            )));
        }
        let sigma_obs = forward.sigma_obs();
        let inv_var = 1.0 / (sigma_obs * sigma_obs);
        let rhs = forward.at_y().iter().map(|v| v * inv_var).collect();
        Ok(PrecisionContext {
            forward,
            ops,
            sigma_obs,
            rhs,
            lambda_diag: vec![1.0; n],
            lambda_h_diag: vec![1.0; ops.n_increments()],
            lambda_v_diag: vec![1.0; ops.n_increments()],
            version: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.ops.n()
    }

    pub fn ops(&self) -> &DiffOperators {
        &self.ops
    }

    pub fn forward(&self) -> &ForwardModel {
        self.forward
    }

    pub fn sigma_obs(&self) -> f64 {
        self.sigma_obs
    }

    /// `A^T y / sigma^2`, the linear term of the potential.
    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn diagonals(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.lambda_diag, &self.lambda_h_diag, &self.lambda_v_diag)
    }

    /// Replace the three diagonal fields; bumps the version counter.
    pub fn set_diagonals(
        &mut self,
        lambda_diag: Vec<f64>,
        lambda_h_diag: Vec<f64>,
        lambda_v_diag: Vec<f64>,
    ) -> Result<()> {
        let check = |name: &str, v: &[f64], want: usize| -> Result<()> {
            if v.len() != want {
                return Err(Error::shape(format!("{name} has length {}, expected {want}", v.len())));
            }
            if !v.iter().all(|&x| x > 0.0 && x.is_finite()) {
                return Err(Error::state(format!("{name} must be strictly positive and finite")));
            }
            Ok(())
        };
        check("Lambda diagonal", &lambda_diag, self.ops.n())?;
        check("Lambda_h diagonal", &lambda_h_diag, self.ops.n_increments())?;
        check("Lambda_v diagonal", &lambda_v_diag, self.ops.n_increments())?;
        self.lambda_diag = lambda_diag;
        self.lambda_h_diag = lambda_h_diag;
        self.lambda_v_diag = lambda_v_diag;
        self.version += 1;
        Ok(())
    }
}

/// `L x` with one pass through the forward model and O(n) structured terms.
pub fn apply_precision(x: &[f64], ctx: &PrecisionContext) -> Result<Vec<f64>> {
    let n = ctx.n();
    if x.len() != n {
        return Err(Error::shape(format!("expected vector of length {n}, got {}", x.len())));
    }
    let mut out = vec![0.0; n];
    let mut scratch_m = vec![0.0; ctx.forward.nrows()];
    ctx.forward.apply_normal(x, &mut scratch_m, &mut out);
    let inv_var = 1.0 / (ctx.sigma_obs * ctx.sigma_obs);
    for (o, (xi, li)) in out.iter_mut().zip(x.iter().zip(&ctx.lambda_diag)) {
        *o = *o * inv_var + xi * li;
    }

    let mut inc = vec![0.0; ctx.ops.n_increments()];
    ctx.ops.apply_h(x, &mut inc);
    for (w, l) in inc.iter_mut().zip(&ctx.lambda_h_diag) {
        *w *= l;
    }
    ctx.ops.add_adjoint_h(&inc, &mut out);

    ctx.ops.apply_v(x, &mut inc);
    for (w, l) in inc.iter_mut().zip(&ctx.lambda_v_diag) {
        *w *= l;
    }
    ctx.ops.add_adjoint_v(&inc, &mut out);

    Ok(out)
}

/// Gradient of the potential `U(x) = |y - Ax|^2 / (2 sigma^2) + x^T (prior
/// precision) x / 2`, i.e. `L x - A^T y / sigma^2`.
pub fn grad_potential(x: &[f64], ctx: &PrecisionContext) -> Result<Vec<f64>> {
    let mut g = apply_precision(x, ctx)?;
    for (gi, ri) in g.iter_mut().zip(ctx.rhs()) {
        *gi -= ri;
    }
    Ok(g)
}

/// The potential up to its x-independent constant:
/// `x^T L x / 2 - x^T rhs`. Differences of this quantity are exact.
pub fn potential(x: &[f64], ctx: &PrecisionContext) -> Result<f64> {
    let lx = apply_precision(x, ctx)?;
    let quad: f64 = x.iter().zip(&lx).map(|(a, b)| a * b).sum();
    let lin: f64 = x.iter().zip(ctx.rhs()).map(|(a, b)| a * b).sum();
    Ok(0.5 * quad - lin)
}

/// Convenience: image wrapper for the increments.
pub fn image_diff_h(ops: &DiffOperators, image: &ImageGrid) -> Result<Vec<f64>> {
    apply_diff_h(ops, image.values())
}
