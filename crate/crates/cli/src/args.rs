use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mcf_core::OptimizerConfig;

#[derive(Debug, Parser)]
#[command(name = "mcf", version, about = "Anomaly directions from the maxima of the cumulant function")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a sample from a parametric family and write it as CSV.
    Simulate(SimulateArgs),
    /// Find the maxima of the empirical cumulant function.
    Analyze(AnalysisArgs),
    /// Compare the maxima with the first principal component.
    ComparePca(AnalysisArgs),
    /// Check whether one direction's upper tail dominates another's.
    Tailcheck(TailcheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Gaussian,
    SkewNormal,
    Gamma,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Gaussian => "gaussian",
            Model::SkewNormal => "skew-normal",
            Model::Gamma => "gamma",
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub model: Model,
    /// Parameters as JSON text or a path to a JSON file; defaults to the
    /// reference parameters of the chosen family.
    #[arg(long)]
    pub params: Option<String>,
    /// Number of observations.
    #[arg(long = "n", default_value_t = 50_000)]
    pub n_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; a `<stem>.params.json` sidecar is written next to it.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct OptimizerArgs {
    /// Fixed radius; without it the radius is chosen automatically.
    #[arg(long, conflicts_with = "auto_radius", allow_hyphen_values = true)]
    pub radius: Option<f64>,
    /// Choose the largest radius with ESS >= --ess-min (the default).
    #[arg(long)]
    pub auto_radius: bool,
    #[arg(long, default_value_t = mcf_core::DEFAULT_ESS_MIN)]
    pub ess_min: f64,
    #[arg(long, default_value_t = OptimizerConfig::default().starts)]
    pub starts: usize,
    #[arg(long, default_value_t = OptimizerConfig::default().seed)]
    pub seed: u64,
    #[arg(long, default_value_t = OptimizerConfig::default().max_iters)]
    pub max_iters: usize,
    #[arg(long, default_value_t = OptimizerConfig::default().step_init)]
    pub step_init: f64,
    #[arg(long, default_value_t = OptimizerConfig::default().grad_tol)]
    pub grad_tol: f64,
    #[arg(long, default_value_t = OptimizerConfig::default().angle_dedup_deg)]
    pub angle_dedup_deg: f64,
}

impl OptimizerArgs {
    pub fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            starts: self.starts,
            max_iters: self.max_iters,
            step_init: self.step_init,
            grad_tol: self.grad_tol,
            angle_dedup_deg: self.angle_dedup_deg,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Result JSON; printed to stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub opt: OptimizerArgs,
}

#[derive(Debug, Args)]
pub struct TailcheckArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Comma-separated coordinates; normalized to unit length.
    #[arg(long, allow_hyphen_values = true)]
    pub theta_a: String,
    #[arg(long, allow_hyphen_values = true)]
    pub theta_b: String,
    /// Comma-separated increasing radii; defaults to twelve radii up to twice
    /// the automatic radius.
    #[arg(long)]
    pub radii: Option<String>,
    #[arg(long, default_value_t = mcf_core::DEFAULT_ESS_MIN)]
    pub ess_min: f64,
    /// Seed for the automatic-radius probe directions.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
