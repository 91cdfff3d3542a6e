//! Validation machinery: Monte Carlo coverage, normality checks, sweeps and
//! timing.

pub mod mc;
pub mod normality;
pub mod sweep;

pub use mc::{coverage_rate, monte_carlo, voxel_coverage, CoverageStats, McOptions, McReport, SigmaSource};
pub use normality::{qq_data, qq_max_deviation, shapiro_wilk, NormalityReport};
pub use sweep::{impulse_sweep, rank_sweep, timing_compare, ImpulseBudget, ImpulseRow, RankRow, TimingRow};
