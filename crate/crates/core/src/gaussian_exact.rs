//! Exact sampling of the conditional Gaussian `N(mu, L^-1)` specified by its
//! precision matrix `L` and linear term `rhs = L mu`, via Cholesky
//! factorization. This is the Gaussian block of the two-block Gibbs sampler
//! and scales as O(n^3); past [`CAPACITY_LIMIT`] callers are pointed at the
//! continuous-time sampler instead.

use crate::distributions::{fill_std_normal, RngStream};
use crate::error::{Error, Result};
use crate::operators::PrecisionContext;

/// Largest dimension the dense sampler will materialize (128^2).
pub const CAPACITY_LIMIT: usize = 16_384;

/// A materialized symmetric precision matrix with its linear term.
#[derive(Debug, Clone)]
pub struct DensePrecision {
    n: usize,
    matrix: Vec<f64>,
    rhs: Vec<f64>,
}

impl DensePrecision {
    /// Wrap an explicit row-major matrix; rejects asymmetry beyond 1e-10
    /// relative.
    pub fn from_parts(matrix: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        let n = rhs.len();
        if matrix.len() != n * n {
            return Err(Error::shape(format!(
                "matrix has {} entries, expected {} for rhs of length {n}",
                matrix.len(),
                n * n
            )));
        }
        let scale = matrix.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1e-300);
        for i in 0..n {
            for j in 0..i {
                if (matrix[i * n + j] - matrix[j * n + i]).abs() > 1e-10 * scale {
                    return Err(Error::state(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(DensePrecision { n, matrix, rhs })
    }

    /// Materialize the full conditional precision from a matrix-free
    /// context: `A^T A / sigma^2` plus the three structured diagonal terms.
    pub fn from_context(ctx: &PrecisionContext) -> Result<Self> {
        let n = ctx.n();
        if n > CAPACITY_LIMIT {
            return Err(Error::Capacity {
                n,
                max: CAPACITY_LIMIT,
            });
        }
        let inv_var = 1.0 / (ctx.sigma_obs() * ctx.sigma_obs());
        let ata = ctx.forward().dense_ata();
        let mut matrix: Vec<f64> = ata.iter().map(|v| v * inv_var).collect();
        let (ld, lh, lv) = ctx.diagonals();
        for i in 0..n {
            matrix[i * n + i] += ld[i];
        }
        let d = ctx.ops().side();
        // D_h^T Lambda_h D_h: increment k couples pixels (i, j-1) and (i, j).
        for i in 0..d {
            for j in 1..d {
                let w = lh[i * (d - 1) + (j - 1)];
                let p = i * d + j - 1;
                let q = i * d + j;
                matrix[p * n + p] += w;
                matrix[q * n + q] += w;
                matrix[p * n + q] -= w;
                matrix[q * n + p] -= w;
            }
        }
        // D_v^T Lambda_v D_v: increment couples (i-1, j) and (i, j).
        for i in 1..d {
            for j in 0..d {
                let w = lv[(i - 1) * d + j];
                let p = (i - 1) * d + j;
                let q = i * d + j;
                matrix[p * n + p] += w;
                matrix[q * n + q] += w;
                matrix[p * n + q] -= w;
                matrix[q * n + p] -= w;
            }
        }
        Ok(DensePrecision {
            n,
            matrix,
            rhs: ctx.rhs().to_vec(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Lower-triangular Cholesky factor `L L^T = matrix`.
    pub fn factor(&self) -> Result<CholeskyFactor> {
        let n = self.n;
        let mut l = self.matrix.clone();
        for i in 0..n {
            for j in 0..i {
                let s = {
                    let (head, tail) = l.split_at(i * n);
                    let row_j = &head[j * n..j * n + j];
                    let row_i = &tail[..j];
                    let dot: f64 = row_i.iter().zip(row_j).map(|(a, b)| a * b).sum();
                    tail[j] - dot
                };
                l[i * n + j] = s / l[j * n + j];
            }
            let s = {
                let row_i = &l[i * n..i * n + i];
                let dot: f64 = row_i.iter().map(|v| v * v).sum();
                l[i * n + i] - dot
            };
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: i, value: s });
            }
            l[i * n + i] = s.sqrt();
            for j in i + 1..n {
                l[i * n + j] = 0.0;
            }
        }
        Ok(CholeskyFactor { n, l })
    }

    /// One exact draw from `N(L^-1 rhs, L^-1)`; factors internally. Reuse
    /// [`DensePrecision::factor`] directly when drawing repeatedly.
    pub fn sample(&self, rng: &mut RngStream) -> Result<Vec<f64>> {
        let factor = self.factor()?;
        Ok(factor.sample(&self.rhs, rng))
    }
}

/// Lower-triangular factor with solve and sampling kernels.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    l: Vec<f64>,
}

impl CholeskyFactor {
    /// Solve `L L^T x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        // Forward: L w = b.
        for i in 0..n {
            let dot: f64 = self.l[i * n..i * n + i]
                .iter()
                .zip(&x[..i])
                .map(|(a, b)| a * b)
                .sum();
            x[i] = (x[i] - dot) / self.l[i * n + i];
        }
        // Backward: L^T x = w.
        for i in (0..n).rev() {
            let mut acc = x[i];
            for k in i + 1..n {
                acc -= self.l[k * n + i] * x[k];
            }
            x[i] = acc / self.l[i * n + i];
        }
        x
    }

    /// Solve `L^T x = z` only (used to color standard normals).
    fn solve_transposed(&self, z: &mut [f64]) {
        let n = self.n;
        for i in (0..n).rev() {
            let mut acc = z[i];
            for k in i + 1..n {
                acc -= self.l[k * n + i] * z[k];
            }
            z[i] = acc / self.l[i * n + i];
        }
    }

    /// Exact Gaussian draw `mu + L^-T z` with `mu` solved from `rhs`.
    pub fn sample(&self, rhs: &[f64], rng: &mut RngStream) -> Vec<f64> {
        let mut z = vec![0.0; self.n];
        fill_std_normal(&mut z, rng);
        self.solve_transposed(&mut z);
        let mu = self.solve(rhs);
        for (zi, mi) in z.iter_mut().zip(&mu) {
            *zi += mi;
        }
        z
    }
}

/// Exact draw from the conditional Gaussian of a matrix-free precision
/// context. Fails with a capacity error above [`CAPACITY_LIMIT`].
pub fn sample_conditional_gaussian(ctx: &PrecisionContext, rng: &mut RngStream) -> Result<Vec<f64>> {
    DensePrecision::from_context(ctx)?.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::RngStream;
    use crate::model::ForwardModel;
    use crate::operators::{apply_precision, DiffOperators, PrecisionContext};
    use crate::sparse::SparseMatrix;

    #[test]
    fn identity_precision_gives_standard_normals() {
        let n = 3;
        let mut eye = vec![0.0; n * n];
        for i in 0..n {
            eye[i * n + i] = 1.0;
        }
        let dp = DensePrecision::from_parts(eye, vec![0.0; n]).unwrap();
        let mut rng = RngStream::from_seed(40);
        let reps = 100_000;
        let mut sum = vec![0.0; n];
        let mut sum_sq = vec![0.0; n];
        for _ in 0..reps {
            let x = dp.sample(&mut rng).unwrap();
            for i in 0..n {
                sum[i] += x[i];
                sum_sq[i] += x[i] * x[i];
            }
        }
        let se = 1.0 / (reps as f64).sqrt();
        for i in 0..n {
            let mean = sum[i] / reps as f64;
            let var = sum_sq[i] / reps as f64 - mean * mean;
            assert!(mean.abs() < 3.0 * se);
            assert!((var - 1.0).abs() < 3.0 * (2.0f64 / reps as f64).sqrt());
        }
    }

    #[test]
    fn two_by_two_mean_and_covariance() {
        // Precision [[2,1],[1,2]], rhs (1,1): mean (1/3, 1/3),
        // covariance (1/3) [[2,-1],[-1,2]].
        let dp = DensePrecision::from_parts(vec![2.0, 1.0, 1.0, 2.0], vec![1.0, 1.0]).unwrap();
        let factor = dp.factor().unwrap();
        let mut rng = RngStream::from_seed(41);
        let reps = 1_000_000;
        let mut sum = [0.0f64; 2];
        let mut sum_outer = [0.0f64; 4];
        for _ in 0..reps {
            let x = factor.sample(dp.rhs(), &mut rng);
            sum[0] += x[0];
            sum[1] += x[1];
            sum_outer[0] += x[0] * x[0];
            sum_outer[1] += x[0] * x[1];
            sum_outer[2] += x[1] * x[0];
            sum_outer[3] += x[1] * x[1];
        }
        let mean = [sum[0] / reps as f64, sum[1] / reps as f64];
        let want_cov: [f64; 4] = [2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0];
        let se_mean = (2.0f64 / 3.0).sqrt() / (reps as f64).sqrt();
        assert!((mean[0] - 1.0 / 3.0).abs() < 3.0 * se_mean, "mean = {mean:?}");
        assert!((mean[1] - 1.0 / 3.0).abs() < 3.0 * se_mean);
        for (k, (i, j)) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)].iter().enumerate() {
            let cov = sum_outer[k] / reps as f64 - mean[*i] * mean[*j];
            // Asymptotic SE of a Gaussian sample covariance:
            // sqrt((C_ii C_jj + C_ij^2) / N).
            let se_cov = ((want_cov[i * 2 + i] * want_cov[j * 2 + j]
                + want_cov[i * 2 + j].powi(2))
                / reps as f64)
                .sqrt();
            assert!(
                (cov - want_cov[i * 2 + j]).abs() < 3.0 * se_cov,
                "cov[{i}{j}] = {cov}"
            );
        }
    }

    #[test]
    fn random_spd_covariance_matches_inverse() {
        // Random SPD 6x6 via M = B B^T + 6 I; empirical covariance of draws
        // must match the direct inverse entrywise.
        let n = 6;
        let mut rng = RngStream::from_seed(42);
        let b = crate::distributions::sample_std_normal_vector(n * n, &mut rng).unwrap();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += b[i * n + k] * b[j * n + k];
                }
                m[i * n + j] = acc + if i == j { 6.0 } else { 0.0 };
            }
        }
        let dp = DensePrecision::from_parts(m.clone(), vec![0.0; n]).unwrap();
        let factor = dp.factor().unwrap();

        // Direct inverse column by column through the factor.
        let mut inv = vec![0.0; n * n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = factor.solve(&e);
            for i in 0..n {
                inv[i * n + j] = col[i];
            }
        }

        let reps = 1_000_000;
        let mut sum = vec![0.0; n];
        let mut sum_outer = vec![0.0; n * n];
        for _ in 0..reps {
            let x = factor.sample(dp.rhs(), &mut rng);
            for i in 0..n {
                sum[i] += x[i];
                for j in 0..n {
                    sum_outer[i * n + j] += x[i] * x[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                let mi = sum[i] / reps as f64;
                let mj = sum[j] / reps as f64;
                let cov = sum_outer[i * n + j] / reps as f64 - mi * mj;
                let se = ((inv[i * n + i] * inv[j * n + j] + inv[i * n + j].powi(2))
                    / reps as f64)
                    .sqrt();
                assert!(
                    (cov - inv[i * n + j]).abs() < 3.0 * se,
                    "cov[{i}{j}] = {cov} vs {}",
                    inv[i * n + j]
                );
            }
        }
    }

    #[test]
    fn mean_equation_residual_is_tiny() {
        let d = 3;
        let n = d * d;
        let mut rng = RngStream::from_seed(43);
        let rows: Vec<Vec<(u32, f64)>> = (0..6)
            .map(|_| {
                (0..3)
                    .map(|_| {
                        let c = (rng.uniform_open01() * n as f64) as u32;
                        (c.min(n as u32 - 1), rng.uniform_open01() + 0.2)
                    })
                    .collect()
            })
            .collect();
        let mut model = ForwardModel::new(SparseMatrix::from_rows(6, n, rows).unwrap());
        let y: Vec<f64> = (0..6).map(|_| rng.uniform_open01()).collect();
        model.set_measurement(y, 0.5).unwrap();
        let ops = DiffOperators::new(d).unwrap();
        let ctx = PrecisionContext::new(&model, ops).unwrap();
        let dp = DensePrecision::from_context(&ctx).unwrap();
        let factor = dp.factor().unwrap();
        let mu = factor.solve(dp.rhs());

        // Residual through the matrix-free application, which doubles as a
        // consistency check of the dense materialization.
        let lmu = apply_precision(&mu, &ctx).unwrap();
        let rhs_inf = dp.rhs().iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let resid = lmu
            .iter()
            .zip(dp.rhs())
            .fold(0.0f64, |a, (l, r)| a.max((l - r).abs()));
        assert!(resid < 1e-8 * rhs_inf, "residual = {resid}");

        // The gradient vanishes at the conditional mean.
        let g = crate::operators::grad_potential(&mu, &ctx).unwrap();
        let g_inf = g.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        assert!(g_inf < 1e-8, "grad at mode = {g_inf}");
    }

    #[test]
    fn dense_materialization_matches_matrix_free() {
        let d = 3;
        let n = d * d;
        let mut rng = RngStream::from_seed(44);
        let mut model = ForwardModel::new(SparseMatrix::identity(n));
        model
            .set_measurement((0..n).map(|i| i as f64 * 0.1).collect(), 0.8)
            .unwrap();
        let ops = DiffOperators::new(d).unwrap();
        let mut ctx = PrecisionContext::new(&model, ops).unwrap();
        let pos = |rng: &mut RngStream| rng.uniform_open01() * 2.0 + 0.1;
        let ld: Vec<f64> = (0..n).map(|_| pos(&mut rng)).collect();
        let lh: Vec<f64> = (0..d * (d - 1)).map(|_| pos(&mut rng)).collect();
        let lv: Vec<f64> = (0..d * (d - 1)).map(|_| pos(&mut rng)).collect();
        ctx.set_diagonals(ld, lh, lv).unwrap();
        let dp = DensePrecision::from_context(&ctx).unwrap();
        for b in 0..n {
            let mut e = vec![0.0; n];
            e[b] = 1.0;
            let free = apply_precision(&e, &ctx).unwrap();
            for i in 0..n {
                let dense = dp.matrix()[i * n + b];
                assert!((free[i] - dense).abs() < 1e-12, "entry ({i}, {b})");
            }
        }
    }

    #[test]
    fn non_spd_matrix_names_pivot() {
        let m = vec![1.0, 0.0, 0.0, -2.0];
        let dp = DensePrecision::from_parts(m, vec![0.0, 0.0]).unwrap();
        match dp.factor() {
            Err(Error::NotPositiveDefinite { pivot, value }) => {
                assert_eq!(pivot, 1);
                assert!(value < 0.0);
            }
            other => panic!("expected SPD violation, got {other:?}"),
        }
    }

    #[test]
    fn capacity_guard_fires() {
        let d = 129; // n = 16641 > 16384
        let n = d * d;
        let model = ForwardModel::new(SparseMatrix::zeros(1, n));
        let ops = DiffOperators::new(d).unwrap();
        let ctx = PrecisionContext::new(&model, ops).unwrap();
        match DensePrecision::from_context(&ctx) {
            Err(Error::Capacity { n: got, max }) => {
                assert_eq!(got, n);
                assert_eq!(max, CAPACITY_LIMIT);
            }
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let m = vec![1.0, 0.5, 0.0, 1.0];
        assert!(DensePrecision::from_parts(m, vec![0.0, 0.0]).is_err());
    }
}
