//! Parameter sweeps over Monte Carlo coverage, and wall-clock comparisons.

use std::time::Instant;

use crate::cube::HsiCube;
use crate::error::{Error, Result};
use crate::lowrank::SparseBudget;
use crate::noise::NoiseSpec;
use crate::pipeline::{denoise, denoise_with_uq, PipelineConfig};
use crate::stats::mc::{monte_carlo, McOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankRow {
    pub rank: usize,
    pub mean_coverage: f64,
    pub std_coverage: f64,
}

/// One Monte Carlo summary per solver rank.
pub fn rank_sweep(
    clean: &HsiCube,
    noise: &NoiseSpec,
    cfg: &PipelineConfig,
    ranks: &[usize],
    opts: &McOptions,
) -> Result<Vec<RankRow>> {
    ranks
        .iter()
        .map(|&rank| {
            let mut c = *cfg;
            c.window.rank = rank;
            let r = monte_carlo(clean, noise, &c, opts)?;
            Ok(RankRow {
                rank,
                mean_coverage: r.mean_coverage,
                std_coverage: r.std_coverage,
            })
        })
        .collect()
}

/// How the GoDec outlier budget follows the impulse ratio in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ImpulseBudget {
    /// Sparse budget set to `⌊ratio · K·L⌋` entries per patch.
    #[default]
    MatchRatio,
    /// Keep the budget given in the pipeline configuration.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpulseRow {
    pub sigma0: f64,
    pub impulse_ratio: f64,
    pub mean_coverage: f64,
    pub std_coverage: f64,
}

/// Coverage over a grid of Gaussian levels × impulse ratios. The pipeline's
/// σ₀ tracks the Gaussian level of each cell; row order is σ₀-major.
pub fn impulse_sweep(
    clean: &HsiCube,
    sigma0s: &[f64],
    ratios: &[f64],
    cfg: &PipelineConfig,
    budget: ImpulseBudget,
    opts: &McOptions,
    seed: u64,
) -> Result<Vec<ImpulseRow>> {
    if let Some(r) = ratios.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(Error::InvalidArgument(format!("impulse ratio {r} outside [0, 1]")));
    }
    let mut rows = Vec::with_capacity(sigma0s.len() * ratios.len());
    for &sigma0 in sigma0s {
        for &ratio in ratios {
            let mut c = *cfg;
            c.sigma0 = sigma0;
            if budget == ImpulseBudget::MatchRatio {
                c.window.sparse = SparseBudget::Fraction(ratio);
            }
            let noise = NoiseSpec::gaussian(sigma0, seed).with_impulse(ratio);
            let r = monte_carlo(clean, &noise, &c, opts)?;
            rows.push(ImpulseRow {
                sigma0,
                impulse_ratio: ratio,
                mean_coverage: r.mean_coverage,
                std_coverage: r.std_coverage,
            });
        }
    }
    Ok(rows)
}

/// Wall-clock seconds of a full Monte Carlo study versus one restoration with
/// and without the variance map, all on the same noisy input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingRow {
    pub mc_trials: usize,
    pub mc_total: f64,
    pub lrma_only: f64,
    pub lrma_plus_uq: f64,
}

impl TimingRow {
    /// Extra time of the variance map relative to plain restoration.
    pub fn uq_overhead(&self) -> f64 {
        self.lrma_plus_uq / self.lrma_only - 1.0
    }
}

fn seconds<T>(f: impl FnOnce() -> Result<T>) -> Result<f64> {
    let start = Instant::now();
    f()?;
    Ok(start.elapsed().as_secs_f64())
}

/// A single trial is allowed here; it times one noisy restoration with the
/// variance map, which is what the study would cost at `T = 1`.
pub fn timing_compare(clean: &HsiCube, noise: &NoiseSpec, cfg: &PipelineConfig, mc_trials: usize) -> Result<TimingRow> {
    if mc_trials == 0 {
        return Err(Error::InvalidArgument("at least one Monte Carlo trial is required".into()));
    }
    let noisy = noise.apply(clean)?;
    let lrma_only = seconds(|| denoise(&noisy, cfg))?;
    let lrma_plus_uq = seconds(|| denoise_with_uq(&noisy, cfg))?;
    let mc_total = if mc_trials == 1 {
        seconds(|| denoise_with_uq(&noise.apply(clean)?, cfg))?
    } else {
        seconds(|| monte_carlo(clean, noise, cfg, &McOptions::new(mc_trials)))?
    };
    Ok(TimingRow {
        mc_trials,
        mc_total,
        lrma_only,
        lrma_plus_uq,
    })
}

/// Median wall-clock of `denoise` and `denoise_with_uq` over `repeats`
/// interleaved runs.
pub fn median_runtimes(noisy: &HsiCube, cfg: &PipelineConfig, repeats: usize) -> Result<(f64, f64)> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be positive".into()));
    }
    let mut plain = Vec::with_capacity(repeats);
    let mut with_uq = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        plain.push(seconds(|| denoise(noisy, cfg))?);
        with_uq.push(seconds(|| denoise_with_uq(noisy, cfg))?);
    }
    Ok((median(&mut plain), median(&mut with_uq)))
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::Dims;
    use crate::noise::synth_lowrank_cube;
    use crate::window::WindowConfig;

    fn setup() -> (HsiCube, PipelineConfig) {
        (
            synth_lowrank_cube(Dims::new(16, 16, 8), 2, 7).unwrap(),
            PipelineConfig::new(WindowConfig::new(8, 4, 2), 0.05),
        )
    }

    #[test]
    fn single_rank_matches_standalone_run() {
        let (clean, cfg) = setup();
        let noise = NoiseSpec::gaussian(0.05, 3);
        let opts = McOptions::new(6);
        let rows = rank_sweep(&clean, &noise, &cfg, &[2], &opts).unwrap();
        let r = monte_carlo(&clean, &noise, &cfg, &opts).unwrap();
        assert_eq!(rows, vec![RankRow { rank: 2, mean_coverage: r.mean_coverage, std_coverage: r.std_coverage }]);
    }

    #[test]
    fn zero_ratio_column_matches_gaussian_run() {
        let (clean, cfg) = setup();
        let opts = McOptions::new(5);
        let rows = impulse_sweep(&clean, &[0.05], &[0.0, 0.1], &cfg, ImpulseBudget::MatchRatio, &opts, 9).unwrap();
        assert_eq!(rows.len(), 2);
        let r = monte_carlo(&clean, &NoiseSpec::gaussian(0.05, 9), &cfg, &opts).unwrap();
        assert_eq!(rows[0].mean_coverage, r.mean_coverage);
        assert!(impulse_sweep(&clean, &[0.05], &[1.5], &cfg, ImpulseBudget::Fixed, &opts, 9).is_err());
    }

    #[test]
    fn timing_rows_are_positive() {
        let (clean, cfg) = setup();
        let t = timing_compare(&clean, &NoiseSpec::gaussian(0.05, 1), &cfg, 2).unwrap();
        assert!(t.mc_total > 0.0 && t.lrma_only > 0.0 && t.lrma_plus_uq > 0.0);
        assert!(timing_compare(&clean, &NoiseSpec::gaussian(0.05, 1), &cfg, 0).is_err());
        let (a, b) = median_runtimes(&clean, &cfg, 3).unwrap();
        assert!(a > 0.0 && b > 0.0);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
