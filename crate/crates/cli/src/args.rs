use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

use softextrap::fitting::Pipeline;

#[derive(Debug, Parser)]
#[command(name = "softextrap", version, about = "Soft extrapolation from windowed, noisy samples")]
pub struct Cli {
    /// Key-value file (`key = value` per line) supplying flags not given on
    /// the command line.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Degree, scale and window for a perturbation level.
    Plan(PlanArgs),
    /// Fit a model to samples in an `x,g` CSV and write it as JSON.
    Fit(FitArgs),
    /// Evaluate a fitted model at complex points.
    Eval(EvalArgs),
    /// Pointwise error envelope as CSV `z_re,z_im,region,bound`.
    Bound(BoundArgs),
    /// Perturbation levels where a fixed point changes region.
    Thresholds(ThresholdArgs),
    /// The dark object for `cosh(tau z)` and its coefficient check.
    Dark(DarkArgs),
    /// Monte-Carlo experiments on the Hermite pipeline.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PipelineArg {
    Generic,
    Hermite,
}

impl From<PipelineArg> for Pipeline {
    fn from(p: PipelineArg) -> Self {
        match p {
            PipelineArg::Generic => Pipeline::Generic,
            PipelineArg::Hermite => Pipeline::Hermite,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// Window exponent, `>= 2`.
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    /// Growth order of the target, `1 <= lambda < alpha`.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Growth type of the target, data units.
    #[arg(long, default_value_t = 0.3)]
    pub tau: f64,
    /// Perturbation level in (0, 1).
    #[arg(long, allow_hyphen_values = true)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = PipelineArg::Generic)]
    pub pipeline: PipelineArg,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Print the plan as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// CSV with columns `x` and `g`.
    #[arg(long, value_name = "CSV")]
    pub samples: PathBuf,
    /// Model JSON destination; stdout when absent.
    #[arg(long, value_name = "JSON")]
    pub out: Option<PathBuf>,
    /// Spacing constant `C` in the grid check `max gap <= C a_n / n`.
    #[arg(long, default_value_t = softextrap::fitting::DEFAULT_DENSITY_CONSTANT)]
    pub density_constant: f64,
    /// Fit even if the grid check fails.
    #[arg(long)]
    pub allow_invalid_grid: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model JSON written by `fit`.
    #[arg(long, value_name = "JSON")]
    pub model: PathBuf,
    #[command(flatten)]
    pub points: PointArgs,
}

/// Evaluation points: explicit `--z` values, a real grid, or both.
#[derive(Debug, Clone, Args)]
pub struct PointArgs {
    /// Point `RE` or `RE,IM`; repeatable.
    #[arg(long = "z", value_name = "RE[,IM]", allow_hyphen_values = true)]
    pub z: Vec<String>,
    /// Start of a real grid.
    #[arg(long, allow_hyphen_values = true, requires = "z_max")]
    pub z_min: Option<f64>,
    /// End of a real grid.
    #[arg(long, allow_hyphen_values = true, requires = "z_min")]
    pub z_max: Option<f64>,
    /// Number of real grid points.
    #[arg(long, default_value_t = 101)]
    pub z_count: usize,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub points: PointArgs,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// Fixed real evaluation point.
    #[arg(long)]
    pub z0: f64,
    /// Type of the target, data units (Hermite pipeline).
    #[arg(long)]
    pub tau: f64,
}

#[derive(Debug, Args)]
pub struct DarkArgs {
    #[arg(long)]
    pub tau: f64,
    /// Number of subtracted coefficients.
    #[arg(long, conflicts_with = "eps", required_unless_present = "eps")]
    pub n: Option<usize>,
    /// Take the degree from the Hermite plan at this level instead.
    #[arg(long)]
    pub eps: Option<f64>,
    #[command(flatten)]
    pub points: PointArgs,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    /// Error against the envelope along a real z grid.
    Pointwise(PointwiseArgs),
    /// Error at a fixed point as the perturbation level varies.
    EpsSweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct PointwiseArgs {
    #[arg(long)]
    pub tau: f64,
    #[arg(long)]
    pub eps: f64,
    /// Noise bound; defaults to `eps`.
    #[arg(long)]
    pub noise_level: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Falls back to `SOFTEXTRAP_SEED`, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true, requires = "z_max")]
    pub z_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "z_min")]
    pub z_max: Option<f64>,
    #[arg(long, default_value_t = softextrap::experiment::DEFAULT_Z_COUNT)]
    pub z_count: usize,
    #[arg(long, default_value_t = softextrap::fitting::DEFAULT_OVERSAMPLING)]
    pub oversampling: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub tau: f64,
    #[arg(long)]
    pub z0: f64,
    /// Explicit decreasing levels, comma separated. Overrides the range.
    #[arg(long, value_delimiter = ',')]
    pub eps_list: Vec<f64>,
    #[arg(long, default_value_t = 1e-2)]
    pub eps_hi: f64,
    #[arg(long, default_value_t = 1e-14)]
    pub eps_lo: f64,
    #[arg(long, default_value_t = 4)]
    pub per_decade: usize,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Falls back to `SOFTEXTRAP_SEED`, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = softextrap::fitting::DEFAULT_OVERSAMPLING)]
    pub oversampling: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
