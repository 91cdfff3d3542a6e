//! Rank-constrained approximation of permuted patches.
//!
//! [`truncated_svd`] is the exact Eckart–Young projection; [`godec`] alternates
//! that projection with hard thresholding of a sparse outlier component.
//! [`procrustes_rectify`] and [`factor_error_samples`] measure how noisy
//! factor estimates scatter around the truth once the rotational gauge
//! freedom of `X Yᵀ` is removed.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};

/// Truncated SVD triple `U · diag(sigma) · Vᵀ`.
///
/// Columns of `u` and `v` are orthonormal, `sigma` is non-increasing and each
/// singular pair is sign-fixed so that the largest-magnitude entry of every
/// `u` column is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactors {
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl LowRankFactors {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }

    /// `X = U Σ^{1/2}`.
    pub fn x_aux(&self) -> DMatrix<f64> {
        scale_columns(&self.u, self.sigma.iter().map(|s| s.sqrt()))
    }

    /// `Y = V Σ^{1/2}`.
    pub fn y_aux(&self) -> DMatrix<f64> {
        scale_columns(&self.v, self.sigma.iter().map(|s| s.sqrt()))
    }
}

fn scale_columns(m: &DMatrix<f64>, scales: impl Iterator<Item = f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for (j, s) in scales.enumerate() {
        out.column_mut(j).scale_mut(s);
    }
    out
}

fn ensure_finite(a: &DMatrix<f64>) -> Result<()> {
    match a.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

fn full_svd(a: DMatrix<f64>) -> Result<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    SVD::try_new(a, true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::InvalidArgument("SVD failed to converge".into()))
}

/// Best rank-`rank` approximation factors of `a`.
pub fn truncated_svd(a: &DMatrix<f64>, rank: usize) -> Result<LowRankFactors> {
    let max = a.nrows().min(a.ncols());
    if rank == 0 || rank > max {
        return Err(Error::InvalidRank { rank, max });
    }
    ensure_finite(a)?;
    let svd = full_svd(a.clone())?;
    let (u_all, vt_all) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]).then(i.cmp(&j)));

    let (k, l) = (a.nrows(), a.ncols());
    let mut u = DMatrix::zeros(k, rank);
    let mut v = DMatrix::zeros(l, rank);
    let mut sigma = DVector::zeros(rank);
    for (dst, &src) in order.iter().take(rank).enumerate() {
        let ucol = u_all.column(src);
        let pivot = ucol
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, &x)| if x.abs() > best.1.abs() { (i, x) } else { best });
        let sign = if pivot.1 < 0.0 { -1.0 } else { 1.0 };
        u.column_mut(dst).copy_from(&(ucol * sign));
        v.column_mut(dst).copy_from(&(vt_all.row(src).transpose() * sign));
        sigma[dst] = svd.singular_values[src].max(0.0);
    }
    Ok(LowRankFactors { u, sigma, v })
}

/// Size of the sparse outlier component allowed in GoDec.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SparseBudget {
    /// Absolute number of entries.
    Count(usize),
    /// Fraction of the `K·L` entries of the permuted patch, in `[0, 1)`.
    Fraction(f64),
}

impl Default for SparseBudget {
    fn default() -> Self {
        SparseBudget::Count(0)
    }
}

impl SparseBudget {
    /// Entry count for a matrix with `entries` elements.
    pub fn resolve(&self, entries: usize) -> Result<usize> {
        let k = match *self {
            SparseBudget::Count(k) => k,
            SparseBudget::Fraction(f) => {
                if !(0.0..1.0).contains(&f) {
                    return Err(Error::InvalidArgument(format!(
                        "sparse fraction {f} outside [0, 1)"
                    )));
                }
                (f * entries as f64).floor() as usize
            }
        };
        if k > 0 && k >= entries {
            return Err(Error::InvalidSparseBudget { k, entries });
        }
        Ok(k)
    }
}

/// Stopping rule for [`godec`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GodecOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GodecOptions {
    fn default() -> Self {
        GodecOptions {
            tol: 1e-7,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GodecResult {
    pub lowrank: DMatrix<f64>,
    pub sparse: DMatrix<f64>,
    /// Factors of the final low-rank iterate.
    pub factors: LowRankFactors,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    /// `‖A − L_t − S_t‖_F` after every iteration.
    pub residuals: Vec<f64>,
}

/// Keeps the `k` largest-magnitude entries of `r` (ties broken by lower
/// column-major index), zeroing the rest.
fn hard_threshold(r: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(r.nrows(), r.ncols());
    if k == 0 {
        return out;
    }
    let vals = r.as_slice();
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    let by_mag = |&i: &usize, &j: &usize| vals[j].abs().total_cmp(&vals[i].abs()).then(i.cmp(&j));
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, by_mag);
    }
    let dst = out.as_mut_slice();
    for &i in &idx[..k] {
        dst[i] = vals[i];
    }
    out
}

/// GoDec low-rank plus sparse decomposition `A ≈ L + S`, `rank(L) ≤ rank`,
/// `nnz(S) ≤ sparse`.
///
/// Non-convergence within `max_iter` is reported through `converged`, not as
/// an error.
pub fn godec(a: &DMatrix<f64>, rank: usize, sparse: usize, opts: GodecOptions) -> Result<GodecResult> {
    let entries = a.len();
    if sparse > 0 && sparse >= entries {
        return Err(Error::InvalidSparseBudget { k: sparse, entries });
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", opts.tol)));
    }
    if opts.max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be positive".into()));
    }

    let mut s = DMatrix::zeros(a.nrows(), a.ncols());
    let mut residuals = Vec::new();
    let mut converged = false;
    let mut last = None;
    for _ in 0..opts.max_iter {
        let factors = truncated_svd(&(a - &s), rank)?;
        let l = factors.reconstruct();
        let r = a - &l;
        s = hard_threshold(&r, sparse);
        let res = (r - &s).norm();
        residuals.push(res);

        // with an empty sparse budget S stays zero, so L is already the fixed point
        let done = match residuals.as_slice() {
            _ if sparse == 0 || res == 0.0 => true,
            [.., prev, cur] => *prev == 0.0 || (prev - cur).abs() / prev < opts.tol,
            _ => false,
        };
        last = Some((l, factors));
        if done {
            converged = true;
            break;
        }
    }
    let (lowrank, factors) = last.expect("max_iter > 0");
    Ok(GodecResult {
        lowrank,
        sparse: s,
        factors,
        iterations: residuals.len(),
        converged,
        final_residual: *residuals.last().expect("at least one iteration"),
        residuals,
    })
}

/// Orthogonal gauge alignment of an estimated factor pair to a reference.
#[derive(Debug, Clone)]
pub struct Rectification {
    /// `r×r` orthogonal matrix `R` minimising `‖X̂R − X‖² + ‖ŶR − Y‖²`.
    pub rotation: DMatrix<f64>,
    /// The cross-product `X̂ᵀX + ŶᵀY` was rank deficient, so `R` is not unique.
    pub rank_deficient: bool,
}

/// Solves the two-block orthogonal Procrustes problem through the SVD of
/// `XhᵀXs + YhᵀYs = A S Bᵀ`, returning `R = A Bᵀ`.
pub fn procrustes_rectify(
    xh: &DMatrix<f64>,
    yh: &DMatrix<f64>,
    xs: &DMatrix<f64>,
    ys: &DMatrix<f64>,
) -> Result<Rectification> {
    let r = xh.ncols();
    let conformable = yh.ncols() == r
        && xs.ncols() == r
        && ys.ncols() == r
        && xh.nrows() == xs.nrows()
        && yh.nrows() == ys.nrows();
    if !conformable || r == 0 {
        return Err(Error::ShapeMismatch(format!(
            "procrustes factors {}x{}, {}x{} vs {}x{}, {}x{}",
            xh.nrows(),
            xh.ncols(),
            yh.nrows(),
            yh.ncols(),
            xs.nrows(),
            xs.ncols(),
            ys.nrows(),
            ys.ncols()
        )));
    }
    let cross = xh.transpose() * xs + yh.transpose() * ys;
    if cross.iter().all(|&v| v == 0.0) {
        return Ok(Rectification {
            rotation: DMatrix::identity(r, r),
            rank_deficient: true,
        });
    }
    let svd = full_svd(cross)?;
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let rank_deficient = smin <= smax * f64::EPSILON * r as f64;
    let rotation = svd.u.expect("u requested") * svd.v_t.expect("v_t requested");
    Ok(Rectification {
        rotation,
        rank_deficient,
    })
}

/// Empirical row covariance of the rectified factor errors `X̂R̂ − X*` and
/// `ŶR̂ − Y*`, pooled over all rows of all trials.
#[derive(Debug, Clone)]
pub struct FactorErrorStats {
    pub cov_x: DMatrix<f64>,
    pub cov_y: DMatrix<f64>,
    pub trials: usize,
}

fn row_covariance(rows: &DMatrix<f64>) -> DMatrix<f64> {
    let n = rows.nrows() as f64;
    let mean = rows.row_mean();
    let mut centered = rows.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    (centered.transpose() * centered) / (n - 1.0)
}

pub fn factor_error_samples(truth: &LowRankFactors, trials: &[LowRankFactors]) -> Result<FactorErrorStats> {
    if trials.len() < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            actual: trials.len(),
        });
    }
    let r = truth.rank();
    let (xs, ys) = (truth.x_aux(), truth.y_aux());
    let (k, l) = (xs.nrows(), ys.nrows());
    let mut zx = DMatrix::zeros(k * trials.len(), r);
    let mut zy = DMatrix::zeros(l * trials.len(), r);
    for (t, trial) in trials.iter().enumerate() {
        if trial.rank() != r || trial.u.nrows() != k || trial.v.nrows() != l {
            return Err(Error::ShapeMismatch(format!(
                "trial {t} has factors {}x{} / {}x{}, expected {k}x{r} / {l}x{r}",
                trial.u.nrows(),
                trial.rank(),
                trial.v.nrows(),
                trial.rank()
            )));
        }
        let (xh, yh) = (trial.x_aux(), trial.y_aux());
        let rot = procrustes_rectify(&xh, &yh, &xs, &ys)?.rotation;
        zx.rows_mut(t * k, k).copy_from(&(xh * &rot - &xs));
        zy.rows_mut(t * l, l).copy_from(&(yh * &rot - &ys));
    }
    Ok(FactorErrorStats {
        cov_x: row_covariance(&zx),
        cov_y: row_covariance(&zy),
        trials: trials.len(),
    })
}

/// First-order prediction `σ₀² Σ⁻¹` for the factor-error row covariance.
pub fn predicted_factor_covariance(truth: &LowRankFactors, sigma0: f64) -> DMatrix<f64> {
    DMatrix::from_diagonal(&truth.sigma.map(|s| sigma0 * sigma0 / s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, k: usize, l: usize) -> DMatrix<f64> {
        DMatrix::from_fn(k, l, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        random_matrix(rng, n, n).qr().q()
    }

    fn assert_orthonormal(m: &DMatrix<f64>, tol: f64) {
        let g = m.transpose() * m;
        let id = DMatrix::<f64>::identity(g.nrows(), g.ncols());
        assert!((g - id).amax() <= tol);
    }

    #[test]
    fn diagonal_case() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0, 1.0]));
        let f = truncated_svd(&a, 2).unwrap();
        assert!((f.sigma[0] - 3.0).abs() < 1e-14 && (f.sigma[1] - 2.0).abs() < 1e-14);
        let expect = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0, 0.0]));
        assert!((f.reconstruct() - expect).amax() < 1e-14);
    }

    #[test]
    fn rank_one_hand_svd() {
        // (1,2)ᵀ(1,2) = [[1,2],[2,4]], σ₁ = ‖(1,2)‖² = 5
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let f = truncated_svd(&a, 1).unwrap();
        assert!((f.sigma[0] - 5.0).abs() < 1e-13);
        assert!((f.reconstruct() - &a).amax() < 1e-13);
        let s = 1.0 / 5f64.sqrt();
        assert!((f.u[(0, 0)] - s).abs() < 1e-14 && (f.u[(1, 0)] - 2.0 * s).abs() < 1e-14);
        assert!((f.v[(0, 0)] - s).abs() < 1e-14 && (f.v[(1, 0)] - 2.0 * s).abs() < 1e-14);
    }

    #[test]
    fn matches_full_svd_truncation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_matrix(&mut rng, 30, 20);
        let r = 5;
        let f = truncated_svd(&a, r).unwrap();
        // oracle: Eckart–Young error equals the tail of the singular spectrum
        let mut sv: Vec<f64> = a.clone().singular_values().iter().copied().collect();
        sv.sort_by(|x, y| y.total_cmp(x));
        let tail: f64 = sv[r..].iter().map(|s| s * s).sum::<f64>().sqrt();
        let err = (&a - f.reconstruct()).norm();
        assert!((err - tail).abs() < 1e-10);
        for i in 0..r {
            assert!((f.sigma[i] - sv[i]).abs() < 1e-10);
        }
        assert_orthonormal(&f.u, 1e-10);
        assert_orthonormal(&f.v, 1e-10);
    }

    #[test]
    fn sign_convention_and_aux_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 12, 9);
        let f = truncated_svd(&a, 4).unwrap();
        for j in 0..4 {
            let col = f.u.column(j);
            let big = col.iter().fold(0.0f64, |m, &x| if x.abs() > m.abs() { x } else { m });
            assert!(big > 0.0);
            if j > 0 {
                assert!(f.sigma[j] <= f.sigma[j - 1]);
            }
        }
        let sig = DMatrix::from_diagonal(&f.sigma);
        let (x, y) = (f.x_aux(), f.y_aux());
        assert!((x.transpose() * &x - &sig).amax() < 1e-10);
        assert!((y.transpose() * &y - &sig).amax() < 1e-10);
    }

    #[test]
    fn leverage_mass_equals_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_matrix(&mut rng, 25, 10);
        let f = truncated_svd(&a, 3).unwrap();
        let row_mass: f64 = f.u.row_iter().map(|r| r.norm_squared()).sum();
        let col_mass: f64 = f.v.row_iter().map(|r| r.norm_squared()).sum();
        assert!((row_mass - 3.0).abs() < 1e-10 && (col_mass - 3.0).abs() < 1e-10);
    }

    #[test]
    fn svd_errors() {
        let a = DMatrix::zeros(4, 3);
        assert!(matches!(truncated_svd(&a, 0), Err(Error::InvalidRank { .. })));
        assert!(matches!(truncated_svd(&a, 4), Err(Error::InvalidRank { rank: 4, max: 3 })));
        let mut b = DMatrix::zeros(3, 3);
        b[(1, 1)] = f64::INFINITY;
        assert!(matches!(truncated_svd(&b, 1), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn eckart_young_beats_random_factorizations() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let a = random_matrix(&mut rng, 10, 8);
            let best = (&a - truncated_svd(&a, 2).unwrap().reconstruct()).norm();
            let guess = random_matrix(&mut rng, 10, 2) * random_matrix(&mut rng, 2, 8);
            assert!(best <= (&a - guess).norm());
        }
    }

    #[test]
    fn godec_fixed_point_on_exact_low_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(&mut rng, 20, 3) * random_matrix(&mut rng, 3, 12);
        let res = godec(&a, 3, 0, GodecOptions::default()).unwrap();
        assert!(res.converged);
        assert!((&res.lowrank - &a).norm() / a.norm() <= 1e-8);
    }

    #[test]
    fn godec_k0_equals_tsvd() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_matrix(&mut rng, 15, 9);
        let res = godec(&a, 2, 0, GodecOptions::default()).unwrap();
        let f = truncated_svd(&a, 2).unwrap();
        assert_eq!(res.iterations, 1);
        assert!((&res.lowrank - f.reconstruct()).norm() <= 1e-10);
        assert!(res.sparse.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn godec_isolates_spike() {
        let u = DVector::from_fn(12, |i, _| 0.5 + 0.1 * i as f64);
        let v = DVector::from_fn(8, |j, _| 1.0 - 0.05 * j as f64);
        let low = &u * v.transpose();
        let mut a = low.clone();
        a[(4, 3)] += 5.0;
        let res = godec(&a, 1, 1, GodecOptions::default()).unwrap();
        assert!(res.converged);
        let nz: Vec<_> = res.sparse.iter().enumerate().filter(|(_, &x)| x != 0.0).collect();
        assert_eq!(nz.len(), 1);
        assert_eq!(nz[0].0, 3 * 12 + 4);
        assert!((&res.lowrank - &low).amax() < 1e-6);
    }

    #[test]
    fn godec_residual_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let mut a = random_matrix(&mut rng, 16, 10);
            for _ in 0..8 {
                let (i, j) = (rng.random_range(0..16), rng.random_range(0..10));
                a[(i, j)] += rng.random_range(-5.0..5.0);
            }
            let res = godec(&a, 2, 8, GodecOptions { tol: 1e-12, max_iter: 30 }).unwrap();
            for w in res.residuals.windows(2) {
                assert!(w[1] <= w[0], "residual increased: {:?}", res.residuals);
            }
        }
    }

    #[test]
    fn godec_reports_nonconvergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a = random_matrix(&mut rng, 10, 10);
        let res = godec(&a, 2, 10, GodecOptions { tol: 1e-300, max_iter: 2 }).unwrap();
        assert_eq!(res.iterations, 2);
        assert!(!res.converged);
    }

    #[test]
    fn godec_argument_errors() {
        let a = DMatrix::zeros(3, 3);
        assert!(matches!(godec(&a, 1, 9, GodecOptions::default()), Err(Error::InvalidSparseBudget { .. })));
        assert!(matches!(godec(&a, 4, 0, GodecOptions::default()), Err(Error::InvalidRank { .. })));
        assert!(godec(&a, 1, 0, GodecOptions { tol: 0.0, max_iter: 5 }).is_err());
    }

    #[test]
    fn hard_threshold_keeps_largest() {
        let r = DMatrix::from_column_slice(2, 3, &[0.1, -3.0, 2.0, 0.5, -2.0, 0.0]);
        let s = hard_threshold(&r, 2);
        // |−3| first, then the tie |2| = |−2| goes to the lower index
        assert_eq!(s.as_slice(), &[0.0, -3.0, 2.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn sparse_budget_resolution() {
        assert_eq!(SparseBudget::Count(3).resolve(10).unwrap(), 3);
        assert_eq!(SparseBudget::Fraction(0.25).resolve(10).unwrap(), 2);
        assert!(SparseBudget::Count(10).resolve(10).is_err());
        assert!(SparseBudget::Fraction(1.0).resolve(10).is_err());
        assert!(SparseBudget::Fraction(-0.1).resolve(10).is_err());
    }

    #[test]
    fn procrustes_identity_and_gauge() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let xs = random_matrix(&mut rng, 9, 3);
        let ys = random_matrix(&mut rng, 6, 3);
        let rec = procrustes_rectify(&xs, &ys, &xs, &ys).unwrap();
        assert!((rec.rotation - DMatrix::<f64>::identity(3, 3)).amax() < 1e-10);

        let q = random_orthogonal(&mut rng, 3);
        let rec = procrustes_rectify(&(&xs * &q), &(&ys * &q), &xs, &ys).unwrap();
        assert!((&rec.rotation - q.transpose()).amax() < 1e-10);
        assert!((&xs * &q * &rec.rotation - &xs).norm() < 1e-10);
        assert_orthonormal(&rec.rotation, 1e-10);
    }

    #[test]
    fn procrustes_beats_random_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let xs = random_matrix(&mut rng, 10, 3);
        let ys = random_matrix(&mut rng, 7, 3);
        let q = random_orthogonal(&mut rng, 3);
        let xh = &xs * &q + random_matrix(&mut rng, 10, 3) * 0.2;
        let yh = &ys * &q + random_matrix(&mut rng, 7, 3) * 0.2;
        let objective = |r: &DMatrix<f64>| (&xh * r - &xs).norm_squared() + (&yh * r - &ys).norm_squared();
        let rec = procrustes_rectify(&xh, &yh, &xs, &ys).unwrap();
        let best = objective(&rec.rotation);
        for _ in 0..100 {
            assert!(best <= objective(&random_orthogonal(&mut rng, 3)) + 1e-12);
        }
    }

    #[test]
    fn procrustes_degenerate_zero() {
        let z = DMatrix::zeros(4, 2);
        let rec = procrustes_rectify(&z, &DMatrix::zeros(3, 2), &z, &DMatrix::zeros(3, 2)).unwrap();
        assert!(rec.rank_deficient);
        assert_eq!(rec.rotation, DMatrix::identity(2, 2));
        assert!(procrustes_rectify(&z, &DMatrix::zeros(3, 3), &z, &DMatrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn factor_errors_zero_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let a = random_matrix(&mut rng, 12, 2) * random_matrix(&mut rng, 2, 8);
        let truth = truncated_svd(&a, 2).unwrap();
        let trials = vec![truth.clone(), truth.clone(), truth.clone()];
        let stats = factor_error_samples(&truth, &trials).unwrap();
        assert!(stats.cov_x.amax() <= 1e-12 && stats.cov_y.amax() <= 1e-12);
        assert!(matches!(factor_error_samples(&truth, &trials[..1]), Err(Error::TooFewSamples { .. })));
    }
}
