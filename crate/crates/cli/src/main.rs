//! `lrma-uq`: sliding-window low-rank denoising with per-voxel uncertainty.
//!
//! Data goes to files only. Configuration echoes and errors go to standard
//! error; a failure is a single `error: <kind>: <message>` line and a nonzero
//! exit status.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lrma_uq::io::Dtype;
use lrma_uq::pipeline::{with_threads, Solver};
use lrma_uq::uq::CorrelationRule;

#[derive(Parser, Debug)]
#[command(name = "lrma-uq", version, about)]
struct Cli {
    /// Worker threads; 0 uses all available cores
    #[arg(long, global = true, env = "LRMA_UQ_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic low-rank cube
    Simulate(SimulateArgs),
    /// Add Gaussian and optional salt-and-pepper noise to a cube
    Noise(NoiseArgs),
    /// Denoise a cube, optionally writing its variance map
    Denoise(DenoiseArgs),
    /// Monte Carlo coverage study of the variance map
    Mc(McArgs),
    /// Normality diagnostics on a sample column
    Validate(ValidateArgs),
    /// Coverage over a grid of ranks or impulse ratios
    Sweep(SweepArgs),
    /// Wall-clock of Monte Carlo vs closed-form uncertainty
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Cube size as ROWS,COLS,BANDS
    #[arg(long, value_parser = parse_dims)]
    dims: [usize; 3],
    #[arg(long, default_value_t = 3)]
    rank: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = DtypeArg::F64)]
    dtype: DtypeArg,
}

#[derive(Args, Debug)]
struct NoiseArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    sigma0: f64,
    #[arg(long, default_value_t = 0.0)]
    impulse_ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = DtypeArg::F64)]
    dtype: DtypeArg,
}

/// Window geometry and solver settings shared by every processing command.
#[derive(Args, Debug, Clone)]
struct PipelineArgs {
    /// Spatial side of the square window
    #[arg(long, default_value_t = 20)]
    window: usize,
    #[arg(long, default_value_t = 4)]
    step: usize,
    #[arg(long, default_value_t = 7)]
    rank: usize,
    #[arg(long, value_enum, default_value_t = SolverArg::Godec)]
    solver: SolverArg,
    /// Outlier entries per window kept by the sparse part
    #[arg(long, conflicts_with = "sparse_fraction")]
    sparse_count: Option<usize>,
    /// Outlier budget as a fraction of the window's entries, in [0, 1)
    #[arg(long)]
    sparse_fraction: Option<f64>,
    /// Correlation model between overlapping windows
    #[arg(long, value_enum, default_value_t = EtaArg::Overlap)]
    eta: EtaArg,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
}

#[derive(Args, Debug)]
struct DenoiseArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Also write the per-voxel variance map; needs --sigma0
    #[arg(long)]
    variance_out: Option<PathBuf>,
    /// Noise standard deviation used by the variance map
    #[arg(long)]
    sigma0: Option<f64>,
    #[arg(long, value_enum, default_value_t = DtypeArg::F64)]
    dtype: DtypeArg,
}

#[derive(Args, Debug)]
struct McArgs {
    /// Noise-free reference cube
    #[arg(long)]
    clean: PathBuf,
    #[arg(long)]
    sigma0: f64,
    #[arg(long, default_value_t = 0.0)]
    impulse_ratio: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Seed of trial 0; trial l uses seed + l
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    report: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Judge each trial against its own variance map instead of trial 0's
    #[arg(long)]
    per_trial_sigma: bool,
    /// Per-voxel coverage cube
    #[arg(long)]
    coverage_out: Option<PathBuf>,
    /// Per-voxel trial mean cube
    #[arg(long)]
    mean_out: Option<PathBuf>,
    /// Closed-form standard deviation cube of trial 0
    #[arg(long)]
    sigma_out: Option<PathBuf>,
    /// Voxel ROW,COL,BAND whose trial values go to --voxel-samples-out
    #[arg(long, value_parser = parse_dims, requires = "voxel_samples_out")]
    voxel: Option<[usize; 3]>,
    #[arg(long, requires = "voxel")]
    voxel_samples_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(value_enum)]
    test: ValidateKind,
    /// CSV whose first column holds the samples
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(value_enum)]
    kind: SweepKind,
    /// Comma-separated ranks (rank sweep) or impulse ratios (impulse sweep)
    #[arg(long, value_delimiter = ',', required = true)]
    grid: Vec<f64>,
    #[arg(long)]
    clean: PathBuf,
    /// Noise level; a comma-separated list is allowed for the impulse sweep
    #[arg(long, value_delimiter = ',', required = true)]
    sigma0: Vec<f64>,
    /// Impulse ratio applied during a rank sweep
    #[arg(long, default_value_t = 0.0)]
    impulse_ratio: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    report: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Keep the configured sparse budget instead of matching each impulse ratio
    #[arg(long)]
    fixed_budget: bool,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Monte Carlo trials to time
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Reference cube; a synthetic one is generated when absent
    #[arg(long)]
    clean: Option<PathBuf>,
    /// Size of the generated cube as ROWS,COLS,BANDS
    #[arg(long, value_parser = parse_dims, default_value = "40,40,16")]
    dims: [usize; 3],
    #[arg(long, default_value_t = 0.05)]
    sigma0: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    report: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum DtypeArg {
    F64,
    F32,
}

impl From<DtypeArg> for Dtype {
    fn from(d: DtypeArg) -> Self {
        match d {
            DtypeArg::F64 => Dtype::F64,
            DtypeArg::F32 => Dtype::F32,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum SolverArg {
    Godec,
    Tsvd,
}

impl From<SolverArg> for Solver {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Godec => Solver::Godec,
            SolverArg::Tsvd => Solver::Tsvd,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum EtaArg {
    Overlap,
    Independent,
    Full,
}

impl From<EtaArg> for CorrelationRule {
    fn from(e: EtaArg) -> Self {
        match e {
            EtaArg::Overlap => CorrelationRule::OverlapRatio,
            EtaArg::Independent => CorrelationRule::Independent,
            EtaArg::Full => CorrelationRule::Full,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ValidateKind {
    Qq,
    Sw,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum SweepKind {
    Rank,
    Impulse,
}

fn parse_dims(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated integers, got {s:?}"));
    }
    let mut out = [0; 3];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p.parse().map_err(|_| format!("{p:?} is not a non-negative integer"))?;
    }
    Ok(out)
}

/// A failure reported as `error: <kind>: <message>`.
#[derive(Debug)]
pub struct Failure {
    kind: &'static str,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            kind: "usage",
            message: message.into(),
        }
    }
}

impl From<lrma_uq::Error> for Failure {
    fn from(e: lrma_uq::Error) -> Self {
        Failure {
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: usage: {}", one_line(first.trim_start_matches("error: ")));
            return ExitCode::from(2);
        }
    };
    let threads = cli.threads;
    let result = with_threads(threads, || commands::run(cli.command))
        .map_err(Failure::from)
        .and_then(|r| r);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}: {}", f.kind, one_line(&f.message));
            ExitCode::FAILURE
        }
    }
}
