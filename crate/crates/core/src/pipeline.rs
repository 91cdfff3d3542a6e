//! End-to-end restoration: noisy cube in, denoised cube and variance map out.

use rayon::prelude::*;

use crate::cube::{extract_patch, HsiCube};
use crate::error::{Error, Result};
use crate::lowrank::{godec, truncated_svd, GodecOptions, LowRankFactors};
use crate::uq::{accumulate_variance, leverage_map, pixel_major_variance, CorrelationRule};
use crate::window::{
    aggregate_mean_ordered, enumerate_patches, inverse_permute_g, order_by_grid, permute_g, PatchGrid,
    PatchOrigin, WindowConfig,
};

/// Per-patch rank-r solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    /// Low-rank plus sparse decomposition; honours the window's sparse budget.
    #[default]
    Godec,
    /// Plain truncated SVD; the sparse budget is ignored.
    Tsvd,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PipelineConfig {
    pub window: WindowConfig,
    /// Global noise standard deviation used by the variance map.
    pub sigma0: f64,
    pub correlation: CorrelationRule,
    pub solver: Solver,
    pub godec: GodecOptions,
}

impl PipelineConfig {
    pub fn new(window: WindowConfig, sigma0: f64) -> Self {
        PipelineConfig {
            window,
            sigma0,
            ..Default::default()
        }
    }

    pub fn with_solver(mut self, solver: Solver) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_correlation(mut self, correlation: CorrelationRule) -> Self {
        self.correlation = correlation;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Restoration {
    pub denoised: HsiCube,
    /// Patches whose solver stopped at `max_iter`.
    pub nonconverged: usize,
}

#[derive(Debug, Clone)]
pub struct UqRestoration {
    pub denoised: HsiCube,
    pub variance: HsiCube,
    pub nonconverged: usize,
}

struct PatchFit {
    estimate: HsiCube,
    factors: LowRankFactors,
    converged: bool,
}

fn fit_patches(cube: &HsiCube, cfg: &PipelineConfig) -> Result<(PatchGrid, Vec<PatchFit>)> {
    let grid = enumerate_patches(cube.dims(), cfg.window)?;
    let pdims = grid.patch_dims();
    let k = cfg.window.sparse.resolve(pdims.len())?;
    let rank = cfg.window.rank;
    let fits = grid
        .origins()
        .par_iter()
        .map(|origin| {
            let a = permute_g(&extract_patch(cube, origin.voxel(), pdims)?);
            let (low, factors, converged) = match cfg.solver {
                Solver::Tsvd => {
                    let f = truncated_svd(&a, rank)?;
                    (f.reconstruct(), f, true)
                }
                Solver::Godec => {
                    let g = godec(&a, rank, k, cfg.godec)?;
                    (g.lowrank, g.factors, g.converged)
                }
            };
            Ok(PatchFit {
                estimate: inverse_permute_g(&low, pdims.rows, pdims.bands)?,
                factors,
                converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((grid, fits))
}

fn check_sigma(sigma0: f64) -> Result<()> {
    if sigma0.is_finite() && sigma0 >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("sigma0 must be finite and >= 0, got {sigma0}")))
    }
}

/// Patch-wise low-rank restoration followed by patch-mean aggregation.
pub fn denoise(cube: &HsiCube, cfg: &PipelineConfig) -> Result<Restoration> {
    let (grid, fits) = fit_patches(cube, cfg)?;
    Ok(Restoration {
        denoised: aggregate_mean_ordered(fits.iter().map(|f| &f.estimate), &grid)?,
        nonconverged: fits.iter().filter(|f| !f.converged).count(),
    })
}

/// [`denoise`] plus the per-voxel variance map, reusing each patch's factors.
pub fn denoise_with_uq(cube: &HsiCube, cfg: &PipelineConfig) -> Result<UqRestoration> {
    check_sigma(cfg.sigma0)?;
    let (grid, fits) = fit_patches(cube, cfg)?;
    let denoised = aggregate_mean_ordered(fits.iter().map(|f| &f.estimate), &grid)?;
    let variance = ordered_variance(fits.iter().map(|f| &f.factors), &grid, cfg.sigma0, cfg.correlation)?;
    Ok(UqRestoration {
        denoised,
        variance,
        nonconverged: fits.iter().filter(|f| !f.converged).count(),
    })
}

/// Variance map from already-fitted per-patch factors.
pub fn variance_from_factors(
    factors: &[(PatchOrigin, LowRankFactors)],
    grid: &PatchGrid,
    sigma0: f64,
    rule: CorrelationRule,
) -> Result<HsiCube> {
    check_sigma(sigma0)?;
    let ordered = order_by_grid(factors, grid)?;
    ordered_variance(ordered.into_iter(), grid, sigma0, rule)
}

fn ordered_variance<'a>(
    factors: impl Iterator<Item = &'a LowRankFactors>,
    grid: &PatchGrid,
    sigma0: f64,
    rule: CorrelationRule,
) -> Result<HsiCube> {
    let factors: Vec<_> = factors.collect();
    // entries are σ₀²·(leverage sum), non-negative and finite by construction
    let vars: Vec<Vec<f64>> = factors
        .par_iter()
        .map(|f| pixel_major_variance(&leverage_map(f), sigma0))
        .collect();
    let slices: Vec<&[f64]> = vars.iter().map(Vec::as_slice).collect();
    Ok(HsiCube::from_raw(grid.dims(), accumulate_variance(&slices, grid, rule)))
}

/// Per-patch factors of a full pass, in grid order; useful for studying the
/// variance map on frozen fits.
pub fn fit_factors(cube: &HsiCube, cfg: &PipelineConfig) -> Result<(PatchGrid, Vec<(PatchOrigin, LowRankFactors)>)> {
    let (grid, fits) = fit_patches(cube, cfg)?;
    let pairs = grid.origins().iter().copied().zip(fits.into_iter().map(|f| f.factors)).collect();
    Ok((grid, pairs))
}

/// Runs `f` on a dedicated pool of `threads` workers; `0` uses the global pool.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::Dims;
    use crate::lowrank::SparseBudget;
    use crate::noise::{add_gaussian, synth_lowrank_cube};

    fn truth() -> HsiCube {
        synth_lowrank_cube(Dims::new(24, 20, 10), 3, 5).unwrap()
    }

    #[test]
    fn noise_free_low_rank_is_fixed_point() {
        let t = truth();
        for solver in [Solver::Godec, Solver::Tsvd] {
            let cfg = PipelineConfig::new(WindowConfig::new(8, 4, 3), 0.0).with_solver(solver);
            let out = denoise(&t, &cfg).unwrap();
            assert!(out.denoised.max_abs_diff(&t).unwrap() <= 1e-6);
            assert_eq!(out.nonconverged, 0);
        }
    }

    #[test]
    fn denoising_reduces_error() {
        let t = truth();
        let noisy = add_gaussian(&t, 0.05, 1).unwrap();
        let cfg = PipelineConfig::new(WindowConfig::new(8, 4, 3), 0.05);
        let out = denoise(&noisy, &cfg).unwrap();
        let before = noisy.rmse(&t).unwrap();
        let after = out.denoised.rmse(&t).unwrap();
        assert!(after < before, "{after} >= {before}");
    }

    #[test]
    fn full_coverage_for_disjoint_and_half_steps() {
        let noisy = add_gaussian(&truth(), 0.05, 2).unwrap();
        for step in [8, 4] {
            let cfg = PipelineConfig::new(WindowConfig::new(8, step, 3), 0.05);
            let out = denoise_with_uq(&noisy, &cfg).unwrap();
            assert!(out.denoised.data().iter().all(|v| v.is_finite()));
            assert!(out.variance.data().iter().all(|&v| v.is_finite() && v > 0.0));
        }
    }

    #[test]
    fn zero_sigma_gives_zero_variance() {
        let noisy = add_gaussian(&truth(), 0.05, 3).unwrap();
        let out = denoise_with_uq(&noisy, &PipelineConfig::new(WindowConfig::new(8, 4, 3), 0.0)).unwrap();
        assert!(out.variance.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn variance_scales_with_sigma_squared_on_frozen_factors() {
        let noisy = add_gaussian(&truth(), 0.05, 4).unwrap();
        let cfg = PipelineConfig::new(WindowConfig::new(8, 4, 3), 0.05);
        let (grid, factors) = fit_factors(&noisy, &cfg).unwrap();
        let a = variance_from_factors(&factors, &grid, 0.05, cfg.correlation).unwrap();
        let b = variance_from_factors(&factors, &grid, 0.1, cfg.correlation).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((y - 4.0 * x).abs() <= 1e-12 * y.abs().max(1e-300));
        }
        let direct = denoise_with_uq(&noisy, &cfg).unwrap();
        assert_eq!(direct.variance, a);
    }

    #[test]
    fn bit_identical_across_thread_counts() {
        let noisy = add_gaussian(&truth(), 0.05, 6).unwrap();
        let cfg = PipelineConfig::new(WindowConfig::new(8, 2, 3).with_sparse(SparseBudget::Count(4)), 0.05);
        let one = with_threads(1, || denoise_with_uq(&noisy, &cfg)).unwrap().unwrap();
        let four = with_threads(4, || denoise_with_uq(&noisy, &cfg)).unwrap().unwrap();
        assert_eq!(one.denoised.data(), four.denoised.data());
        assert_eq!(one.variance.data(), four.variance.data());
    }

    #[test]
    fn rejects_bad_config() {
        let t = truth();
        assert!(denoise(&t, &PipelineConfig::new(WindowConfig::new(30, 4, 3), 0.0)).is_err());
        assert!(denoise_with_uq(&t, &PipelineConfig::new(WindowConfig::new(8, 4, 3), -1.0)).is_err());
        assert!(denoise(&t, &PipelineConfig::new(WindowConfig::new(8, 4, 11), 0.0)).is_err());
    }
}
