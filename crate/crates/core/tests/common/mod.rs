#![allow(dead_code)]

use lrma_uq::cube::{Dims, HsiCube};
use lrma_uq::lowrank::{truncated_svd, LowRankFactors};
use lrma_uq::noise::add_gaussian;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `rows×cols` matrix with orthonormal columns, from the QR of a uniform draw.
pub fn orthonormal(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
    a.qr().q().columns(0, cols).into_owned()
}

/// Exact factors `U diag(sigmas) Vᵀ` with random orthonormal `U`, `V`.
pub fn truth_factors(rows: usize, cols: usize, sigmas: &[f64], seed: u64) -> LowRankFactors {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = sigmas.len();
    LowRankFactors {
        u: orthonormal(&mut rng, rows, r),
        sigma: DVector::from_column_slice(sigmas),
        v: orthonormal(&mut rng, cols, r),
    }
}

/// `a` plus i.i.d. `N(0, sigma0²)` entries from the library's keyed generator.
pub fn noisy_matrix(a: &DMatrix<f64>, sigma0: f64, seed: u64) -> DMatrix<f64> {
    let flat = HsiCube::new(Dims::new(1, 1, a.len()), a.as_slice().to_vec()).unwrap();
    let noisy = add_gaussian(&flat, sigma0, seed).unwrap();
    DMatrix::from_column_slice(a.nrows(), a.ncols(), noisy.data())
}

/// Rank-r refits of `trials` independent noisy copies of `truth`.
pub fn refits(truth: &LowRankFactors, sigma0: f64, trials: usize, seed: u64) -> Vec<LowRankFactors> {
    let a = truth.reconstruct();
    (0..trials as u64)
        .map(|t| truncated_svd(&noisy_matrix(&a, sigma0, seed + t), truth.rank()).unwrap())
        .collect()
}
