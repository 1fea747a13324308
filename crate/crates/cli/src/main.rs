mod args;
mod config;

use clap::{CommandFactory, Parser};
use num_complex::Complex64;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use args::{
    BoundArgs, Cli, Command, DarkArgs, EvalArgs, ExperimentCommand, FitArgs, PlanArgs, PointArgs,
    PointwiseArgs, ProblemArgs, SweepArgs, ThresholdArgs,
};
use softextrap::bounds::{region_thresholds, BoundProfile, DarkObject};
use softextrap::experiment::{
    env_seed, run_eps_sweep, run_pointwise_experiment, ExperimentConfig, SweepConfig, ZGrid,
};
use softextrap::fitting::{evaluate, extrapolate, FitConfig, FittedModel, Pipeline, SampleSet};
use softextrap::{DegreePlan, ProblemParams};

enum Failure {
    /// Bad invocation; exit code 2.
    Usage(String),
    /// Valid invocation the library rejected; exit code 1.
    Domain(String),
}

impl From<softextrap::Error> for Failure {
    fn from(e: softextrap::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let argv = match config::merge_config(&Cli::command(), std::env::args_os().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(argv);
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Plan(a) => plan(a),
        Command::Fit(a) => fit(a),
        Command::Eval(a) => eval(a),
        Command::Bound(a) => bound(a),
        Command::Thresholds(a) => thresholds(a),
        Command::Dark(a) => dark(a),
        Command::Experiment(ExperimentCommand::Pointwise(a)) => pointwise(a),
        Command::Experiment(ExperimentCommand::EpsSweep(a)) => sweep(a),
    }
}

/// Writes to `path`, or stdout when absent.
fn with_output(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> Outcome) -> Outcome {
    match path {
        Some(p) => {
            let mut file = std::io::BufWriter::new(std::fs::File::create(p)?);
            body(&mut file)?;
            file.flush()?;
        }
        None => body(&mut std::io::stdout().lock())?,
    }
    Ok(())
}

fn seed(flag: Option<u64>) -> Result<u64, Failure> {
    match flag {
        Some(s) => Ok(s),
        None => Ok(env_seed().map_err(|e| Failure::Usage(e.to_string()))?.unwrap_or(0)),
    }
}

fn plan_for(p: &ProblemArgs) -> Result<(Pipeline, DegreePlan), Failure> {
    let pipeline = Pipeline::from(p.pipeline);
    let params = ProblemParams::new(p.alpha, p.tau, p.lambda)?;
    Ok((pipeline, pipeline.plan(&params, p.eps)?))
}

fn parse_point(text: &str) -> Result<Complex64, Failure> {
    let bad = || Failure::Usage(format!("--z expects RE or RE,IM, got `{text}`"));
    let mut parts = text.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| bad()));
    let re = parts.next().ok_or_else(bad)??;
    let im = parts.next().transpose()?.unwrap_or(0.0);
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok(Complex64::new(re, im))
}

fn points(p: &PointArgs) -> Result<Vec<Complex64>, Failure> {
    let mut out = p.z.iter().map(|s| parse_point(s)).collect::<Result<Vec<_>, _>>()?;
    if let (Some(min), Some(max)) = (p.z_min, p.z_max) {
        if p.z_count < 2 {
            return Err(Failure::Usage("--z-count must be >= 2".into()));
        }
        let grid = ZGrid { min, max, count: p.z_count };
        out.extend(grid.points().into_iter().map(|x| Complex64::new(x, 0.0)));
    }
    if out.is_empty() {
        return Err(Failure::Usage("no evaluation points: give --z or --z-min/--z-max".into()));
    }
    Ok(out)
}

fn e(v: f64) -> String {
    format!("{v:.16e}")
}

fn plan(a: PlanArgs) -> Outcome {
    let (pipeline, plan) = plan_for(&a.problem)?;
    if a.json {
        let json = serde_json::to_string_pretty(&plan).map_err(|e| Failure::Domain(e.to_string()))?;
        println!("{json}");
        return Ok(());
    }
    let half = pipeline.grid_half_width(&plan);
    println!("pipeline = {pipeline:?}");
    // a_n and r_n are in plan units; the window is in data units.
    println!("unit_scale = {}", pipeline.unit_scale());
    println!("q = {}", plan.q);
    println!("n = {}", plan.n);
    println!("a_n = {}", plan.a_n);
    println!("r_n = {}", plan.r_n);
    println!("window = [{}, {}]", -half, half);
    Ok(())
}

fn fit(a: FitArgs) -> Outcome {
    let samples = SampleSet::read_csv(&a.samples)?;
    let pipeline = Pipeline::from(a.problem.pipeline);
    let base = match pipeline {
        Pipeline::Hermite => FitConfig::hermite(),
        Pipeline::Generic => FitConfig::default(),
    };
    let config = FitConfig {
        density_constant: a.density_constant,
        allow_invalid_grid: base.allow_invalid_grid || a.allow_invalid_grid,
        ..base
    };
    let params = ProblemParams::new(a.problem.alpha, a.problem.tau, a.problem.lambda)?;
    let (model, plan, report) = extrapolate(&samples, &params, a.problem.eps, &config)?;
    eprintln!(
        "n = {}, extent_ok = {}, density_ok = {}, max gap {:.4e} (allowed {:.4e})",
        plan.n, report.extent_ok, report.density_ok, report.max_gap, report.required_gap
    );
    let json = model.to_json()?;
    with_output(a.out.as_deref(), |w| Ok(writeln!(w, "{json}")?))
}

fn eval(a: EvalArgs) -> Outcome {
    let text = std::fs::read_to_string(&a.model)?;
    let model = FittedModel::from_json(&text)?;
    let zs = points(&a.points)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "z_re,z_im,value_re,value_im")?;
    for z in zs {
        let v = evaluate(&model, z);
        writeln!(out, "{},{},{},{}", e(z.re), e(z.im), e(v.re), e(v.im))?;
    }
    Ok(())
}

fn bound(a: BoundArgs) -> Outcome {
    let (pipeline, plan) = plan_for(&a.problem)?;
    let profile = BoundProfile::new(plan, pipeline)?;
    let zs = points(&a.points)?;
    with_output(a.out.as_deref(), |w| {
        writeln!(w, "z_re,z_im,region,bound")?;
        for z in zs {
            let (region, b) = profile.envelope(z);
            writeln!(w, "{},{},{},{}", e(z.re), e(z.im), region.index(), e(b))?;
        }
        Ok(())
    })
}

fn thresholds(a: ThresholdArgs) -> Outcome {
    let (e12, e23) = region_thresholds(a.z0, a.tau)?;
    println!("eps_12 = {e12:e}");
    println!("eps_23 = {e23:e}");
    Ok(())
}

fn dark(a: DarkArgs) -> Outcome {
    let n = match (a.n, a.eps) {
        (Some(n), _) => n,
        (None, Some(eps)) => Pipeline::Hermite.plan(&ProblemParams::new(2.0, a.tau, 1.0)?, eps)?.n,
        (None, None) => return Err(Failure::Usage("give --n or --eps".into())),
    };
    let dark = DarkObject::new(a.tau, n)?;
    let c = dark.check;
    eprintln!(
        "n = {n}, coefficients = {:?}, printed/projection ratio {:.6}, printed gap {:.3e}, projection gap {:.3e}",
        c.source, c.printed_ratio, c.printed_vs_quadrature, c.projection_vs_quadrature
    );
    let zs = points(&a.points)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "z_re,z_im,dark_re,dark_im,dark_abs")?;
    for z in zs {
        let v = dark.value(z);
        writeln!(out, "{},{},{},{},{}", e(z.re), e(z.im), e(v.re), e(v.im), e(v.norm()))?;
    }
    Ok(())
}

fn pointwise(a: PointwiseArgs) -> Outcome {
    let mut cfg = ExperimentConfig::new(a.tau, a.eps, a.trials, seed(a.seed)?);
    cfg.noise_level = a.noise_level;
    cfg.oversampling = a.oversampling;
    if let (Some(min), Some(max)) = (a.z_min, a.z_max) {
        cfg.z_grid = Some(ZGrid { min, max, count: a.z_count });
    }
    let table = run_pointwise_experiment(&cfg)?;
    with_output(a.out.as_deref(), |w| Ok(table.write_csv(w)?))
}

fn sweep(a: SweepArgs) -> Outcome {
    let eps_list = if a.eps_list.is_empty() {
        SweepConfig::log_spaced(a.eps_hi, a.eps_lo, a.per_decade)
    } else {
        a.eps_list
    };
    let cfg = SweepConfig {
        tau: a.tau,
        z0: a.z0,
        eps_list,
        trials: a.trials,
        seed: seed(a.seed)?,
        oversampling: a.oversampling,
    };
    let table = run_eps_sweep(&cfg)?;
    with_output(a.out.as_deref(), |w| Ok(table.write_csv(w)?))
}
