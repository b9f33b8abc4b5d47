//! Command-line surface.

use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use mbar_core::MetricKind;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "mbar", version, about = "Magic-barrier estimation and metric-distribution analysis")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// More diagnostics on stderr; repeatable.
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,
    /// No diagnostics on stderr.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Rmse,
    Mae,
}

impl From<Metric> for MetricKind {
    fn from(m: Metric) -> Self {
        match m {
            Metric::Rmse => MetricKind::Rmse,
            Metric::Mae => MetricKind::Mae,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScaleArgs {
    /// Lowest rating category.
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    pub scale_min: i32,
    /// Highest rating category.
    #[arg(long, default_value_t = 5, allow_negative_numbers = true)]
    pub scale_max: i32,
    /// Repeated ratings per user-item pair.
    #[arg(long, default_value_t = 5)]
    pub trials: u32,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct McArgs {
    /// Monte-Carlo trials.
    #[arg(long, default_value_t = 100_000)]
    pub tau: usize,
    /// Histogram bins; defaults to ceil(sqrt(tau)) capped at 512.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct PairSource {
    /// Fitted pairs (ingest report or bare JSON list).
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// One-column `variance` CSV.
    #[arg(long)]
    pub variances: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit per-pair Gaussians to a re-rating tensor.
    Ingest(IngestArgs),
    /// Closed-form metric distribution.
    Estimate(EstimateArgs),
    /// Monte-Carlo metric distribution.
    Simulate(SimulateArgs),
    /// Interference probability and improvement criterion of two summaries.
    Compare(CompareArgs),
    /// Barrier moments over a grid of pair counts or variances.
    Sensitivity(SensitivityArgs),
    /// Ranking-error probabilities of two noisy recommenders.
    Rankcurves(RankcurvesArgs),
    /// Distribution of system orderings on common rating draws.
    Rank(RankArgs),
    /// Barrier of a large synthetic dataset with exponential variances.
    Transfer(TransferArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IngestArgs {
    /// Tensor CSV with header `user,item,trial,rating`.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub scale: ScaleArgs,
    /// Significance level of the per-pair normality tests.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Also write the non-vanishing variances as a `variance` CSV.
    #[arg(long)]
    pub variances_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub source: PairSource,
    /// Predictions of a recommender (`user,item,prediction`); the optimal
    /// recommender when absent.
    #[arg(long, requires = "pairs")]
    pub predictors: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Metric::Rmse)]
    pub metric: Metric,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: PairSource,
    /// Simulate the optimal recommender.
    #[arg(long, conflicts_with = "predictors", required_unless_present = "predictors")]
    pub optimal: bool,
    /// Predictions of a recommender (`user,item,prediction`).
    #[arg(long, requires = "pairs")]
    pub predictors: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Metric::Rmse)]
    pub metric: Metric,
    #[command(flatten)]
    pub mc: McArgs,
    /// Clamp drawn ratings to `[clip_min, clip_max]`.
    #[arg(long, requires = "clip_max", allow_negative_numbers = true)]
    pub clip_min: Option<f64>,
    #[arg(long, requires = "clip_min", allow_negative_numbers = true)]
    pub clip_max: Option<f64>,
    /// Write the raw sample as little-endian float64.
    #[arg(long)]
    pub values_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    /// Barrier summary JSON.
    #[arg(long)]
    pub barrier: PathBuf,
    /// Recommender summary JSON.
    #[arg(long)]
    pub system: PathBuf,
    /// Divisor applied to the base-2 JSD.
    #[arg(long, default_value_t = 1.0)]
    pub normalizer: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Pairs,
    Variance,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SensitivityArgs {
    /// Quantity varied along the grid.
    #[arg(long, value_enum)]
    pub vary: Axis,
    /// Grid values, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub grid: Vec<f64>,
    /// Common variance when varying the pair count.
    #[arg(long)]
    pub variance: Option<f64>,
    /// Pair count when varying the variance.
    #[arg(long)]
    pub count: Option<usize>,
    #[command(flatten)]
    pub scale: ScaleArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RankcurvesArgs {
    /// Noise-level differences between the two systems.
    #[arg(long, value_delimiter = ',', required = true)]
    pub deltas: Vec<f64>,
    /// Noise level of the better system.
    #[arg(long, value_delimiter = ',', required = true)]
    pub offsets: Vec<f64>,
    /// Base pairs; synthetic homogeneous pairs when absent.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Number of synthetic pairs.
    #[arg(long, default_value_t = 500, conflicts_with = "pairs")]
    pub count: usize,
    /// Variance of every synthetic pair.
    #[arg(long, default_value_t = 0.5, conflicts_with = "pairs")]
    pub variance: f64,
    /// Rating units per noise level.
    #[arg(long, default_value_t = 0.1)]
    pub noise_scale: f64,
    /// Estimate by simulation with this many trials per point instead of
    /// the closed form.
    #[arg(long)]
    pub mc_trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RankArgs {
    #[arg(long)]
    pub pairs: PathBuf,
    /// One predictor CSV per system; repeatable.
    #[arg(long)]
    pub predictors: Vec<PathBuf>,
    /// Rank the optimal recommender as an extra, first system.
    #[arg(long)]
    pub include_optimal: bool,
    #[arg(long, value_enum, default_value_t = Metric::Rmse)]
    pub metric: Metric,
    #[command(flatten)]
    pub mc: McArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TransferArgs {
    /// Rate of the exponential variance law.
    #[arg(long, default_value_t = 2.11)]
    pub lambda: f64,
    /// Number of sampled variances.
    #[arg(long, default_value_t = 2_800_000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Truncate sampled variances below.
    #[arg(long)]
    pub lower: Option<f64>,
    /// Truncate sampled variances above.
    #[arg(long)]
    pub upper: Option<f64>,
    /// Expected RMSE of the competing recommender.
    #[arg(long, default_value_t = 0.8567)]
    pub competitor_mean: f64,
    /// Its variance; the barrier variance when absent.
    #[arg(long)]
    pub competitor_variance: Option<f64>,
}
