//! Monte-Carlo harness for the Hermite pipeline.
//!
//! Each trial draws i.i.d. uniform noise on `[-eps, eps]` from a ChaCha20
//! stream keyed by `(seed, trial index)`, so output does not depend on how
//! trials are scheduled across threads.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::bounds::{region_thresholds, BoundProfile, CoefficientCheck, DarkObject};
use crate::error::{Error, Result};
use crate::fitting::{build_grid, evaluate_real, fit, Pipeline, SampleSet, DEFAULT_OVERSAMPLING};
use crate::scalars::{check_eps, DegreePlan, ProblemParams};

pub const SEED_ENV: &str = "SOFTEXTRAP_SEED";
pub const DEFAULT_Z_COUNT: usize = 400;
/// The default z grid runs to this multiple of the forbidden edge `n/tau`.
pub const DEFAULT_Z_EXTENT: f64 = 1.2;

/// `(5 + cosh(tau x - 2) + sinh(tau x)) / 14`.
pub fn model_function_f_tau(tau: f64, x: Complex64) -> Complex64 {
    let tx = x * tau;
    ((tx - 2.0).cosh() + tx.sinh() + 5.0) / 14.0
}

pub fn model_function_f_tau_real(tau: f64, x: f64) -> f64 {
    let tx = tau * x;
    ((tx - 2.0).cosh() + tx.sinh() + 5.0) / 14.0
}

/// Uniform noise on `[-bound, bound]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub bound: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(bound: f64, seed: u64) -> Result<Self> {
        if !(bound >= 0.0 && bound.is_finite()) {
            return Err(Error::InvalidParams(format!("noise bound must be >= 0, got {bound}")));
        }
        Ok(NoiseModel { bound, seed })
    }

    /// `count` draws for trial `trial`.
    pub fn draw(&self, trial: u64, count: usize) -> Vec<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        let b = self.bound;
        let draws: Vec<f64> = (0..count).map(|_| rng.random_range(-b..=b)).collect();
        assert!(draws.iter().all(|v| v.abs() <= b), "noise draw outside its bound");
        draws
    }
}

/// Windowed samples `w(x_j) f(x_j) + noise_j` on `nodes` (data units).
pub fn windowed_samples(
    pipeline: Pipeline,
    plan: &DegreePlan,
    nodes: &[f64],
    f: impl Fn(f64) -> f64,
    noise: &[f64],
) -> Result<SampleSet> {
    let w = pipeline.weight(plan);
    let values = nodes.iter().zip(noise).map(|(&x, &e)| w.value(x) * f(x) + e).collect();
    SampleSet::new(nodes.to_vec(), values)
}

/// Absolute errors `|f(z) - S_n(g)(z)|` at each `z`, one row per trial.
fn trial_errors(
    tau: f64,
    plan: &DegreePlan,
    oversampling: f64,
    noise: &NoiseModel,
    trials: usize,
    zs: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let pipeline = Pipeline::Hermite;
    let nodes = build_grid(plan, pipeline, oversampling)?;
    (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let phi = noise.draw(trial, nodes.len());
            let samples =
                windowed_samples(pipeline, plan, &nodes, |x| model_function_f_tau_real(tau, x), &phi)?;
            let model = fit(&samples, plan, pipeline)?;
            Ok(zs
                .iter()
                .map(|&z| (model_function_f_tau_real(tau, z) - evaluate_real(&model, z)).abs())
                .collect())
        })
        .collect()
}

/// Equispaced real `z` values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl ZGrid {
    pub fn points(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| self.min + (self.max - self.min) * i as f64 / last)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Type of `f_tau`, data units.
    pub tau: f64,
    /// Perturbation level used for planning and the envelope.
    pub eps: f64,
    /// Bound of the injected noise; `None` means `eps`.
    pub noise_level: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    /// `None` selects `DEFAULT_Z_COUNT` points on `[0, 1.2 n / tau]`.
    pub z_grid: Option<ZGrid>,
    pub oversampling: f64,
}

impl ExperimentConfig {
    pub fn new(tau: f64, eps: f64, trials: usize, seed: u64) -> Self {
        ExperimentConfig {
            tau,
            eps,
            noise_level: None,
            trials,
            seed,
            z_grid: None,
            oversampling: DEFAULT_OVERSAMPLING,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_eps(self.eps)?;
        if self.trials < 1 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if let Some(g) = self.z_grid {
            if g.count < 2 || !(g.min.is_finite() && g.max.is_finite()) {
                return Err(Error::Config("z grid needs count >= 2 and finite limits".into()));
            }
        }
        Ok(())
    }

    fn params(&self) -> Result<ProblemParams> {
        ProblemParams::new(2.0, self.tau, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointwiseRow {
    pub z: f64,
    pub err_max: f64,
    pub err_mean: f64,
    pub bound: f64,
    pub dark_abs: f64,
    pub region: u8,
}

#[derive(Debug, Clone)]
pub struct PointwiseTable {
    pub plan: DegreePlan,
    pub dark: CoefficientCheck,
    pub rows: Vec<PointwiseRow>,
}

pub const POINTWISE_HEADER: [&str; 6] = ["z", "err_max", "err_mean", "bound", "dark_abs", "region"];

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

impl PointwiseTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(POINTWISE_HEADER)?;
        for r in &self.rows {
            w.write_record([
                fmt(r.z),
                fmt(r.err_max),
                fmt(r.err_mean),
                fmt(r.bound),
                fmt(r.dark_abs),
                r.region.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Error of the Hermite-pipeline fit to `f_tau` along a real `z` grid,
/// against the envelope and the dark object.
pub fn run_pointwise_experiment(config: &ExperimentConfig) -> Result<PointwiseTable> {
    config.validate()?;
    let pipeline = Pipeline::Hermite;
    let plan = pipeline.plan(&config.params()?, config.eps)?;
    let grid = config.z_grid.unwrap_or(ZGrid {
        min: 0.0,
        max: DEFAULT_Z_EXTENT * plan.n as f64 / config.tau,
        count: DEFAULT_Z_COUNT,
    });
    let zs = grid.points();
    let noise = NoiseModel::new(config.noise_level.unwrap_or(config.eps), config.seed)?;
    let errors = trial_errors(config.tau, &plan, config.oversampling, &noise, config.trials, &zs)?;
    let profile = BoundProfile::new(plan, pipeline)?;
    let dark = DarkObject::new(config.tau, plan.n)?;

    let rows = zs
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let (err_max, err_sum) = errors
                .iter()
                .fold((0.0f64, 0.0), |(m, s), trial| (m.max(trial[i]), s + trial[i]));
            let zc = Complex64::new(z, 0.0);
            let (region, bound) = profile.envelope(zc);
            PointwiseRow {
                z,
                err_max,
                err_mean: err_sum / config.trials as f64,
                bound,
                dark_abs: dark.value(zc).norm(),
                region: region.index(),
            }
        })
        .collect();
    Ok(PointwiseTable { plan, dark: dark.check, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub tau: f64,
    pub z0: f64,
    /// Strictly decreasing perturbation levels.
    pub eps_list: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub oversampling: f64,
}

impl SweepConfig {
    /// `per_decade` log-spaced levels from `hi` down to `lo`.
    pub fn log_spaced(hi: f64, lo: f64, per_decade: usize) -> Vec<f64> {
        let (a, b) = (hi.log10(), lo.log10());
        let steps = ((a - b) * per_decade as f64).round() as usize;
        (0..=steps)
            .map(|i| 10f64.powf(a - (a - b) * i as f64 / steps.max(1) as f64))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.eps_list.is_empty() {
            return Err(Error::Config("eps list is empty".into()));
        }
        for &e in &self.eps_list {
            check_eps(e)?;
        }
        if self.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("eps list must be strictly decreasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub n: usize,
    pub err_max: f64,
    pub bound: f64,
    pub dark_abs: f64,
    pub region: u8,
    pub eps_12: f64,
    pub eps_23: f64,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

pub const SWEEP_HEADER: [&str; 6] = ["eps", "err_max", "bound", "dark_abs", "eps_12", "eps_23"];

impl SweepTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SWEEP_HEADER)?;
        for r in &self.rows {
            w.write_record([
                fmt(r.eps),
                fmt(r.err_max),
                fmt(r.bound),
                fmt(r.dark_abs),
                fmt(r.eps_12),
                fmt(r.eps_23),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Error at a fixed `z0` as the perturbation level varies. Levels too
/// large to give degree >= 1 are an error.
pub fn run_eps_sweep(config: &SweepConfig) -> Result<SweepTable> {
    config.validate()?;
    let params = ProblemParams::new(2.0, config.tau, 1.0)?;
    let (eps_12, eps_23) = region_thresholds(config.z0, config.tau)?;
    let pipeline = Pipeline::Hermite;
    let z = Complex64::new(config.z0, 0.0);
    let rows = config
        .eps_list
        .iter()
        .enumerate()
        .map(|(i, &eps)| {
            let plan = pipeline.plan(&params, eps)?;
            // Distinct streams per level: the seed is offset by the level index.
            let noise = NoiseModel::new(eps, config.seed.wrapping_add(i as u64))?;
            let errors = trial_errors(config.tau, &plan, config.oversampling, &noise, config.trials, &[config.z0])?;
            let err_max = errors.iter().map(|t| t[0]).fold(0.0, f64::max);
            let (region, bound) = BoundProfile::new(plan, pipeline)?.envelope(z);
            let dark_abs = DarkObject::new(config.tau, plan.n)?.value(z).norm();
            Ok(SweepRow {
                eps,
                n: plan.n,
                err_max,
                bound,
                dark_abs,
                region: region.index(),
                eps_12,
                eps_23,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { rows })
}

/// Reads `key = value` (or `key value`) lines; `#` starts a comment. Keys
/// are the long flag names without dashes.
pub fn read_key_values(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    parse_key_values(&text)
}

pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => match line.split_once(char::is_whitespace) {
                Some((k, v)) => (k.trim(), v.trim()),
                None => return Err(Error::Config(format!("line {}: expected `key = value`", i + 1))),
            },
        };
        let key = key.trim_start_matches("--");
        if key.is_empty() || value.is_empty() {
            return Err(Error::Config(format!("line {}: expected `key = value`", i + 1)));
        }
        map.insert(key.to_string(), value.to_string());
    }
    Ok(map)
}

/// Seed from `SOFTEXTRAP_SEED`, if set.
pub fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Error::Config(format!("{SEED_ENV}: {e}"))),
    }
}
