//! Monte Carlo trials and the coverage rate of the ±1.96σ̂ interval.

use std::time::Instant;

use rayon::prelude::*;

use crate::cube::HsiCube;
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::pipeline::{denoise_with_uq, PipelineConfig};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.96;

/// Which closed-form σ̂ defines the interval of each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaSource {
    /// σ̂ from trial 0 is used for every trial.
    #[default]
    ReferenceTrial,
    /// Each trial is judged against its own σ̂.
    PerTrial,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub trials: usize,
    pub sigma_source: SigmaSource,
    /// Keep every trial's denoised cube in the report.
    pub keep_samples: bool,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions {
            trials: 100,
            sigma_source: SigmaSource::ReferenceTrial,
            keep_samples: false,
        }
    }
}

impl McOptions {
    pub fn new(trials: usize) -> Self {
        McOptions {
            trials,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct McReport {
    pub trials: usize,
    pub noise: NoiseSpec,
    pub config: PipelineConfig,
    /// Per-voxel mean of the denoised trials.
    pub mean: HsiCube,
    /// Per-voxel fraction of trials inside the interval.
    pub coverage: HsiCube,
    pub mean_coverage: f64,
    /// Population standard deviation of the per-voxel coverage.
    pub std_coverage: f64,
    /// Closed-form standard deviation of the reference trial.
    pub sigma_hat: HsiCube,
    pub samples: Option<Vec<HsiCube>>,
    /// Wall-clock seconds of each trial.
    pub trial_seconds: Vec<f64>,
    pub nonconverged: usize,
}

impl McReport {
    /// Trial values at one flat voxel index, in trial order.
    pub fn voxel_samples(&self, index: usize) -> Option<Vec<f64>> {
        self.samples.as_ref().map(|s| s.iter().map(|c| c.data()[index]).collect())
    }
}

#[derive(Debug, Clone)]
pub struct CoverageStats {
    pub per_voxel: HsiCube,
    pub mean: f64,
    pub std: f64,
}

/// Mean written as `first + Σ(x − first)/n` so identical samples give an
/// exact zero deviation.
pub(crate) fn anchored_mean(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let mut it = values.clone();
    let Some(first) = it.next() else { return f64::NAN };
    let n = values.clone().count() as f64;
    first + values.map(|x| x - first).sum::<f64>() / n
}

/// Fraction of `samples` within `Z95·sigma_hat` of their own mean; the
/// boundary counts as covered.
pub fn voxel_coverage(samples: &[f64], sigma_hat: f64) -> f64 {
    let center = anchored_mean(samples.iter().copied());
    let half = Z95 * sigma_hat;
    samples.iter().filter(|&&x| (x - center).abs() <= half).count() as f64 / samples.len() as f64
}

fn summarize(per_voxel: &[f64]) -> (f64, f64) {
    let n = per_voxel.len() as f64;
    let mean = per_voxel.iter().sum::<f64>() / n;
    let var = per_voxel.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn check_trials(trials: &[HsiCube]) -> Result<()> {
    if trials.len() < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            actual: trials.len(),
        });
    }
    trials.iter().try_for_each(|t| trials[0].ensure_same_dims(t))
}

/// Per-voxel coverage of `trials` against a single σ̂ cube.
pub fn coverage_rate(trials: &[HsiCube], sigma_hat: &HsiCube) -> Result<CoverageStats> {
    check_trials(trials)?;
    trials[0].ensure_same_dims(sigma_hat)?;
    let per_voxel = (0..sigma_hat.data().len())
        .into_par_iter()
        .map(|i| {
            let xs: Vec<f64> = trials.iter().map(|t| t.data()[i]).collect();
            voxel_coverage(&xs, sigma_hat.data()[i])
        })
        .collect::<Vec<_>>();
    let (mean, std) = summarize(&per_voxel);
    Ok(CoverageStats {
        per_voxel: HsiCube::new(sigma_hat.dims(), per_voxel)?,
        mean,
        std,
    })
}

/// Coverage where trial `l` is judged against its own σ̂ cube.
pub fn coverage_rate_per_trial(trials: &[HsiCube], sigma_hats: &[HsiCube]) -> Result<CoverageStats> {
    check_trials(trials)?;
    if sigma_hats.len() != trials.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} sigma cubes for {} trials",
            sigma_hats.len(),
            trials.len()
        )));
    }
    sigma_hats.iter().try_for_each(|s| trials[0].ensure_same_dims(s))?;
    let n = trials.len() as f64;
    let per_voxel = (0..trials[0].data().len())
        .into_par_iter()
        .map(|i| {
            let center = anchored_mean(trials.iter().map(|t| t.data()[i]));
            let hits = trials
                .iter()
                .zip(sigma_hats)
                .filter(|(t, s)| (t.data()[i] - center).abs() <= Z95 * s.data()[i])
                .count();
            hits as f64 / n
        })
        .collect::<Vec<_>>();
    let (mean, std) = summarize(&per_voxel);
    Ok(CoverageStats {
        per_voxel: HsiCube::new(trials[0].dims(), per_voxel)?,
        mean,
        std,
    })
}

/// Runs `opts.trials` independent noise draws through the restoration and
/// measures interval coverage. Trial `l` is seeded with `noise.seed + l`.
pub fn monte_carlo(clean: &HsiCube, noise: &NoiseSpec, cfg: &PipelineConfig, opts: &McOptions) -> Result<McReport> {
    if opts.trials < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            actual: opts.trials,
        });
    }
    noise.validate()?;
    let runs = (0..opts.trials as u64)
        .into_par_iter()
        .map(|l| {
            let start = Instant::now();
            let noisy = noise.with_seed(noise.seed.wrapping_add(l)).apply(clean)?;
            let out = denoise_with_uq(&noisy, cfg)?;
            Ok((out, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<Vec<_>>>()?;

    let trial_seconds = runs.iter().map(|(_, t)| *t).collect();
    let nonconverged = runs.iter().map(|(o, _)| o.nonconverged).sum();
    let mut denoised = Vec::with_capacity(runs.len());
    let mut sigmas = Vec::with_capacity(runs.len());
    for (out, _) in runs {
        denoised.push(out.denoised);
        sigmas.push(out.variance.map(f64::sqrt)?);
    }
    let stats = match opts.sigma_source {
        SigmaSource::ReferenceTrial => coverage_rate(&denoised, &sigmas[0])?,
        SigmaSource::PerTrial => coverage_rate_per_trial(&denoised, &sigmas)?,
    };
    let mean = HsiCube::new(
        clean.dims(),
        (0..clean.data().len())
            .into_par_iter()
            .map(|i| anchored_mean(denoised.iter().map(|t| t.data()[i])))
            .collect(),
    )?;
    let sigma_hat = sigmas.swap_remove(0);
    Ok(McReport {
        trials: opts.trials,
        noise: *noise,
        config: *cfg,
        mean,
        coverage: stats.per_voxel,
        mean_coverage: stats.mean,
        std_coverage: stats.std,
        sigma_hat,
        samples: opts.keep_samples.then_some(denoised),
        trial_seconds,
        nonconverged,
    })
}
