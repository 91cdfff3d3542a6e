use lrma_uq::cube::{Dims, HsiCube, VoxelIndex};
use lrma_uq::io::{read_cube, read_samples_csv, write_cube, write_report_csv, QqPoint, SampleValue};
use lrma_uq::lowrank::{GodecOptions, SparseBudget};
use lrma_uq::noise::{synth_lowrank_cube, NoiseSpec};
use lrma_uq::pipeline::{denoise, denoise_with_uq, PipelineConfig, Solver};
use lrma_uq::stats::{
    impulse_sweep, monte_carlo, qq_data, rank_sweep, shapiro_wilk, timing_compare, ImpulseBudget, McOptions,
    SigmaSource,
};
use lrma_uq::uq::CorrelationRule;
use lrma_uq::window::WindowConfig;

use crate::{
    BenchArgs, Command, DenoiseArgs, Failure, McArgs, NoiseArgs, PipelineArgs, SimulateArgs, SweepArgs, SweepKind,
    ValidateArgs, ValidateKind,
};

type CmdResult = Result<(), Failure>;

fn invalid(message: String) -> Failure {
    Failure {
        kind: "invalid-argument",
        message,
    }
}

pub fn run(cmd: Command) -> CmdResult {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::Noise(a) => noise(a),
        Command::Denoise(a) => denoise_cmd(a),
        Command::Mc(a) => mc(a),
        Command::Validate(a) => validate(a),
        Command::Sweep(a) => sweep(a),
        Command::Bench(a) => bench(a),
    }
}

fn pipeline_config(a: &PipelineArgs, sigma0: f64) -> PipelineConfig {
    let sparse = match (a.sparse_count, a.sparse_fraction) {
        (Some(k), _) => SparseBudget::Count(k),
        (None, Some(f)) => SparseBudget::Fraction(f),
        (None, None) => SparseBudget::Count(0),
    };
    PipelineConfig {
        window: WindowConfig::new(a.window, a.step, a.rank).with_sparse(sparse),
        sigma0,
        correlation: a.eta.into(),
        solver: a.solver.into(),
        godec: GodecOptions {
            tol: a.tol,
            max_iter: a.max_iter,
        },
    }
}

fn describe(cfg: &PipelineConfig) -> String {
    let w = &cfg.window;
    let sparse = match w.sparse {
        SparseBudget::Count(k) => k.to_string(),
        SparseBudget::Fraction(f) => format!("{f}*entries"),
    };
    let solver = match cfg.solver {
        Solver::Godec => "godec",
        Solver::Tsvd => "tsvd",
    };
    let eta = match cfg.correlation {
        CorrelationRule::OverlapRatio => "overlap",
        CorrelationRule::Independent => "independent",
        CorrelationRule::Full => "full",
    };
    format!(
        "window={} step={} rank={} solver={solver} sparse={sparse} eta={eta} tol={:e} max_iter={}",
        w.patch_side, w.step, w.rank, cfg.godec.tol, cfg.godec.max_iter
    )
}

fn warn_nonconverged(count: usize) {
    if count > 0 {
        eprintln!("warning: {count} window fits stopped at the iteration limit");
    }
}

fn check_trials(trials: usize) -> CmdResult {
    if trials < 2 {
        return Err(invalid(format!("--trials must be at least 2, got {trials}")));
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> CmdResult {
    let [rows, cols, bands] = a.dims;
    eprintln!("simulate: dims={rows}x{cols}x{bands} rank={} seed={}", a.rank, a.seed);
    let cube = synth_lowrank_cube(Dims::new(rows, cols, bands), a.rank, a.seed)?;
    write_cube(&cube, &a.out, a.dtype.into())?;
    Ok(())
}

fn noise(a: NoiseArgs) -> CmdResult {
    let cube = read_cube(&a.input)?;
    eprintln!("noise: sigma0={} impulse_ratio={} seed={}", a.sigma0, a.impulse_ratio, a.seed);
    let noisy = NoiseSpec::gaussian(a.sigma0, a.seed).with_impulse(a.impulse_ratio).apply(&cube)?;
    write_cube(&noisy, &a.out, a.dtype.into())?;
    Ok(())
}

fn denoise_cmd(a: DenoiseArgs) -> CmdResult {
    if a.variance_out.is_some() && a.sigma0.is_none() {
        return Err(Failure::usage("--variance-out requires --sigma0"));
    }
    let cfg = pipeline_config(&a.pipeline, a.sigma0.unwrap_or(0.0));
    let cube = read_cube(&a.input)?;
    match a.sigma0 {
        Some(s) => eprintln!("denoise: {} sigma0={s}", describe(&cfg)),
        None => eprintln!("denoise: {}", describe(&cfg)),
    }
    match &a.variance_out {
        Some(path) => {
            let out = denoise_with_uq(&cube, &cfg)?;
            warn_nonconverged(out.nonconverged);
            write_cube(&out.denoised, &a.out, a.dtype.into())?;
            write_cube(&out.variance, path, a.dtype.into())?;
        }
        None => {
            let out = denoise(&cube, &cfg)?;
            warn_nonconverged(out.nonconverged);
            write_cube(&out.denoised, &a.out, a.dtype.into())?;
        }
    }
    Ok(())
}

fn mc(a: McArgs) -> CmdResult {
    check_trials(a.trials)?;
    let clean = read_cube(&a.clean)?;
    let cfg = pipeline_config(&a.pipeline, a.sigma0);
    eprintln!(
        "mc: {} sigma0={} impulse_ratio={} trials={} seed={}",
        describe(&cfg),
        a.sigma0,
        a.impulse_ratio,
        a.trials,
        a.seed
    );
    let probe = match a.voxel {
        Some([row, col, band]) => Some(clean.dims().voxel(row, col, band)?),
        None => None,
    };
    let opts = McOptions {
        trials: a.trials,
        sigma_source: if a.per_trial_sigma {
            SigmaSource::PerTrial
        } else {
            SigmaSource::ReferenceTrial
        },
        keep_samples: probe.is_some(),
    };
    let noise = NoiseSpec::gaussian(a.sigma0, a.seed).with_impulse(a.impulse_ratio);
    let report = monte_carlo(&clean, &noise, &cfg, &opts)?;
    warn_nonconverged(report.nonconverged);
    eprintln!("mc: mean_coverage={:.4} std_coverage={:.4}", report.mean_coverage, report.std_coverage);
    write_report_csv(std::slice::from_ref(&report), &a.report)?;
    let cubes: [(&Option<_>, &HsiCube); 3] = [
        (&a.coverage_out, &report.coverage),
        (&a.mean_out, &report.mean),
        (&a.sigma_out, &report.sigma_hat),
    ];
    for (path, cube) in cubes {
        if let Some(p) = path {
            write_cube(cube, p, lrma_uq::io::Dtype::F64)?;
        }
    }
    if let (Some(VoxelIndex { row, col, band }), Some(path)) = (probe, &a.voxel_samples_out) {
        let index = clean.dims().flat(row, col, band);
        let values: Vec<SampleValue> = report
            .voxel_samples(index)
            .expect("samples kept")
            .into_iter()
            .map(SampleValue)
            .collect();
        write_report_csv(&values, path)?;
    }
    Ok(())
}

fn validate(a: ValidateArgs) -> CmdResult {
    let samples = read_samples_csv(&a.samples)?;
    match a.test {
        ValidateKind::Qq => {
            eprintln!("validate qq: n={}", samples.len());
            let pairs: Vec<QqPoint> = qq_data(&samples)?.into_iter().map(|(t, e)| QqPoint(t, e)).collect();
            write_report_csv(&pairs, &a.report)?;
        }
        ValidateKind::Sw => {
            let r = shapiro_wilk(&samples)?;
            eprintln!("validate sw: n={} w={:.6} p_value={:.6}", r.n, r.w, r.p_value);
            write_report_csv(std::slice::from_ref(&r), &a.report)?;
        }
    }
    Ok(())
}

fn sweep(a: SweepArgs) -> CmdResult {
    check_trials(a.trials)?;
    let clean = read_cube(&a.clean)?;
    let opts = McOptions::new(a.trials);
    match a.kind {
        SweepKind::Rank => {
            let &[sigma0] = a.sigma0.as_slice() else {
                return Err(invalid("a rank sweep takes a single --sigma0".into()));
            };
            let ranks = a
                .grid
                .iter()
                .map(|&g| {
                    if g >= 1.0 && g.fract() == 0.0 {
                        Ok(g as usize)
                    } else {
                        Err(invalid(format!("--grid value {g} is not a positive integer rank")))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            let cfg = pipeline_config(&a.pipeline, sigma0);
            eprintln!("sweep rank: {} ranks={ranks:?} sigma0={sigma0} trials={}", describe(&cfg), a.trials);
            let noise = NoiseSpec::gaussian(sigma0, a.seed).with_impulse(a.impulse_ratio);
            write_report_csv(&rank_sweep(&clean, &noise, &cfg, &ranks, &opts)?, &a.report)?;
        }
        SweepKind::Impulse => {
            let cfg = pipeline_config(&a.pipeline, a.sigma0[0]);
            let budget = if a.fixed_budget {
                ImpulseBudget::Fixed
            } else {
                ImpulseBudget::MatchRatio
            };
            eprintln!(
                "sweep impulse: {} ratios={:?} sigma0={:?} trials={} budget={budget:?}",
                describe(&cfg),
                a.grid,
                a.sigma0,
                a.trials
            );
            let rows = impulse_sweep(&clean, &a.sigma0, &a.grid, &cfg, budget, &opts, a.seed)?;
            write_report_csv(&rows, &a.report)?;
        }
    }
    Ok(())
}

fn bench(a: BenchArgs) -> CmdResult {
    if a.trials == 0 {
        return Err(invalid("--trials must be at least 1".into()));
    }
    let clean = match &a.clean {
        Some(p) => read_cube(p)?,
        None => {
            let [rows, cols, bands] = a.dims;
            synth_lowrank_cube(Dims::new(rows, cols, bands), 3, a.seed)?
        }
    };
    let cfg = pipeline_config(&a.pipeline, a.sigma0);
    eprintln!("bench: {} sigma0={} trials={} dims={}", describe(&cfg), a.sigma0, a.trials, clean.dims());
    let row = timing_compare(&clean, &NoiseSpec::gaussian(a.sigma0, a.seed), &cfg, a.trials)?;
    eprintln!(
        "bench: mc_total={:.4}s lrma_only={:.4}s lrma_plus_uq={:.4}s overhead={:.1}%",
        row.mc_total,
        row.lrma_only,
        row.lrma_plus_uq,
        100.0 * row.uq_overhead()
    );
    write_report_csv(&[row], &a.report)?;
    Ok(())
}
