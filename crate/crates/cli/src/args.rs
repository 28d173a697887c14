use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "hgrowth",
    version,
    about = "Long-run growth under heritable fertility risk"
)]
pub struct Cli {
    /// Significant digits for numeric output (default 17).
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..=17))]
    pub precision: Option<u32>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Steady state and long-run growth rate of a growth process.
    Solve(SolveArgs),
    /// Integrate share or mass dynamics and print the trajectory as CSV.
    Dynamics(DynamicsArgs),
    /// Compare a consumption lottery with its mean under c^beta fertility.
    Risk(RiskArgs),
    /// Run one seeded population simulation and print its yearly trace.
    Sim(SimArgs),
    /// Batch simulations over migration/redraw ratios.
    Sweep(SweepArgs),
    /// Re-run the job recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write to this file (plus `<file>.manifest.json`) instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct LotteryArgs {
    /// Comma-separated, strictly increasing support.
    #[arg(long, allow_hyphen_values = true)]
    pub support: Option<String>,
    /// Comma-separated probabilities matching --support.
    #[arg(long)]
    pub probs: Option<String>,
    /// Whole lottery as `support=.. probs=..` or JSON.
    #[arg(long, conflicts_with_all = ["support", "probs"])]
    pub lottery: Option<String>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SolveArgs {
    #[command(flatten)]
    pub lottery: LotteryArgs,
    /// JSON file with any of: support, probs, lottery, lambda_x, delta, mu_y, mu_z.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Heritable redraw rate.
    #[arg(long)]
    pub lambda_x: Option<f64>,
    /// Death rate.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Mean idiosyncratic birth rate.
    #[arg(long)]
    pub mu_y: Option<f64>,
    /// Mean aggregate birth rate.
    #[arg(long)]
    pub mu_z: Option<f64>,
    /// Emit x* over a log-spaced grid `start:end:points` as CSV.
    #[arg(long, value_name = "A:B:N")]
    pub sweep_lambda: Option<String>,
    /// Space the sweep grid linearly.
    #[arg(long, requires = "sweep_lambda")]
    pub linear: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Share,
    Mass,
    Dynasty,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct DynamicsArgs {
    #[arg(long, value_enum, default_value = "share")]
    pub variant: Variant,
    #[command(flatten)]
    pub lottery: LotteryArgs,
    /// JSON file with any of the lottery and rate fields, plus initial, t_end, dt.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub lambda_x: Option<f64>,
    /// Migration rate (dynasty variant).
    #[arg(long)]
    pub lambda_m: Option<f64>,
    /// Dynasty redraw rate (dynasty variant).
    #[arg(long)]
    pub lambda_r: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub mu_y: Option<f64>,
    #[arg(long)]
    pub mu_z: Option<f64>,
    /// Initial shares (share) or masses (mass, dynasty); uniform by default.
    #[arg(long, visible_aliases = ["p0", "w0"])]
    pub initial: Option<String>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct RiskArgs {
    /// Consumption lottery; levels must be positive.
    #[command(flatten)]
    pub lottery: LotteryArgs,
    /// JSON file with any of: support, probs, lottery, beta, lambda_x.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Exponent of the fertility map c^beta, in (0, 1].
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub lambda_x: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args, Default)]
pub struct SimConfigArgs {
    /// SimConfig JSON; missing fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Initial number of agents.
    #[arg(long)]
    pub n_agents: Option<u64>,
    /// Number of dynasties.
    #[arg(long)]
    pub n_dynasties: Option<usize>,
    /// Yearly birth probability in a low dynasty.
    #[arg(long)]
    pub x_low: Option<f64>,
    /// Yearly birth probability in a high dynasty.
    #[arg(long)]
    pub x_high: Option<f64>,
    /// Probability that a redraw gives the high rate.
    #[arg(long)]
    pub q_high: Option<f64>,
    /// Yearly migration probability per agent.
    #[arg(long)]
    pub lambda_m: Option<f64>,
    /// Yearly redraw probability per dynasty.
    #[arg(long)]
    pub lambda_r: Option<f64>,
    /// Yearly death probability.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Stop after this many years.
    #[arg(long)]
    pub max_years: Option<u64>,
    /// Stop once the population reaches this multiple of n_agents.
    #[arg(long)]
    pub growth_cap: Option<f64>,
    /// Extinction once the population falls to n_agents divided by this.
    #[arg(long)]
    pub extinction_floor_factor: Option<f64>,
    /// Seed (sim) or first seed of each batch (sweep).
    #[arg(long, env = "HG_SEED")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SimArgs {
    #[command(flatten)]
    pub config: SimConfigArgs,
    /// Set lambda_m and lambda_r from this migration/redraw ratio.
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Total switching rate used with --ratio.
    #[arg(long, default_value_t = 0.02, requires = "ratio")]
    pub total_switch_rate: f64,
    /// Keep every n-th year in the trace (the last year is always kept).
    #[arg(long, default_value_t = 1)]
    pub every: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: SimConfigArgs,
    /// Comma-separated ratios lambda_m / lambda_r.
    #[arg(long)]
    pub ratios: Option<String>,
    #[arg(long, default_value_t = 15)]
    pub runs: usize,
    #[arg(long, default_value_t = 0.02)]
    pub total_switch_rate: f64,
    /// Worker threads (all cores by default).
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Compare the regenerated output with the recorded file instead of writing it.
    #[arg(long, conflicts_with = "output")]
    pub check: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}
