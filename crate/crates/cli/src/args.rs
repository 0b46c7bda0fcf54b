use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use lidscope::Estimator;

#[derive(Debug, Parser)]
#[command(
    name = "lidscope",
    version,
    about = "Local intrinsic dimension of embedding point clouds",
    arg_required_else_help = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Local TwoNN estimates for one embedding dump.
    Estimate(EstimateArgs),
    /// Compare two cohorts of local estimates (estimate CSVs or dumps).
    Compare(CompareArgs),
    /// Run the pipeline over a grid of M, N, L and seeds.
    Sweep(SweepArgs),
    /// Gaussian noise robustness of the estimates.
    Noise(NoiseArgs),
    /// Mean local estimate per layer.
    Layers(LayersArgs),
    /// Checkpoint series of mean local estimates with aligned metrics.
    Track(TrackArgs),
    /// Synthetic-manifold checks with known answers.
    Selftest(SelftestArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Estimate(_) => "estimate",
            Command::Compare(_) => "compare",
            Command::Sweep(_) => "sweep",
            Command::Noise(_) => "noise",
            Command::Layers(_) => "layers",
            Command::Track(_) => "track",
            Command::Selftest(_) => "selftest",
        }
    }

    /// Shared flags. Panics for `selftest`, which has its own.
    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Estimate(a) => &a.common,
            Command::Compare(a) => &a.common,
            Command::Sweep(a) => &a.common,
            Command::Noise(a) => &a.common,
            Command::Layers(a) => &a.common,
            Command::Track(a) => &a.common,
            Command::Selftest(_) => panic!("selftest has no shared flags"),
        }
    }

    pub fn threads(&self) -> Option<usize> {
        match self {
            Command::Selftest(a) => a.threads,
            other => other.common().threads,
        }
    }
}

fn parse_estimator(s: &str) -> Result<Estimator, String> {
    s.parse().map_err(|e: lidscope::Error| e.to_string())
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Input file; repeat for commands that take several.
    #[arg(
        short = 'i',
        long = "input",
        value_name = "PATH",
        allow_hyphen_values = true
    )]
    pub input: Vec<String>,
    /// Sequence subsample size M (needs token metadata) [default: all sequences]
    #[arg(long, value_name = "M")]
    pub sequences: Option<usize>,
    /// Token subsample size N [default: 60000]
    #[arg(long, value_name = "N")]
    pub tokens: Option<usize>,
    /// Neighborhood size L, the point itself included [default: 128]
    #[arg(long, value_name = "L")]
    pub neighbors: Option<usize>,
    /// Sampling seed [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dimension fit [default: linfit]
    #[arg(long, value_parser = parse_estimator, value_name = "linfit|mle")]
    pub estimator: Option<Estimator>,
    /// Fraction of largest ratios dropped by linfit [default: 0.1]
    #[arg(long, value_name = "F")]
    pub discard_fraction: Option<f64>,
    /// Do not drop the largest ratios inside each neighborhood fit
    #[arg(long)]
    pub no_local_discard: bool,
    /// Output directory [default: .]
    #[arg(short = 'o', long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads [default: all cores]
    #[arg(long, env = "LIDSCOPE_THREADS")]
    pub threads: Option<usize>,
    /// TOML run configuration; flags override its values
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also write the neighbor graph to neighbors.csv
    #[arg(long)]
    pub save_neighbors: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Cohort labels for the two inputs [default: a,b]
    #[arg(long, value_delimiter = ',')]
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated M values [default: --sequences]
    #[arg(long, value_delimiter = ',')]
    pub grid_sequences: Vec<usize>,
    /// Comma-separated N values [default: --tokens]
    #[arg(long, value_delimiter = ',')]
    pub grid_tokens: Vec<usize>,
    /// Comma-separated L values [default: --neighbors]
    #[arg(long, value_delimiter = ',')]
    pub grid_neighbors: Vec<usize>,
    /// Comma-separated sampling seeds [default: --seed]
    #[arg(long, value_delimiter = ',')]
    pub grid_seeds: Vec<u64>,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated noise levels [default: 0,0.001,0.002,0.003,0.004,0.01]
    #[arg(long, value_delimiter = ',')]
    pub sigmas: Vec<f64>,
    /// Comma-separated noise seeds [default: --seed]
    #[arg(long, value_delimiter = ',')]
    pub noise_seeds: Vec<u64>,
    /// Approximate Hausdorff on this many points per side [default: exact]
    #[arg(long, value_name = "COUNT")]
    pub hausdorff_subsample: Option<usize>,
}

#[derive(Debug, Args)]
pub struct LayersArgs {
    /// Inputs are LAYER=PATH pairs.
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    /// Inputs are STEP=ESTIMATES_CSV pairs.
    #[command(flatten)]
    pub common: CommonArgs,
    /// Metrics CSV with header `step,<name>...`
    #[arg(long, value_name = "FILE")]
    pub metrics: Option<PathBuf>,
    /// Split label stored with the series [default: train]
    #[arg(long)]
    pub label: Option<String>,
    /// Trailing window for the stabilization flag [default: 5]
    #[arg(long)]
    pub window: Option<usize>,
    /// Relative range threshold for the stabilization flag [default: 0.02]
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Smaller problem sizes, same tolerances
    #[arg(long)]
    pub quick: bool,
    /// Dimension fit [default: linfit]
    #[arg(long, value_parser = parse_estimator, value_name = "linfit|mle")]
    pub estimator: Option<Estimator>,
    /// Fraction of largest ratios dropped by linfit [default: 0.1]
    #[arg(long, value_name = "F")]
    pub discard_fraction: Option<f64>,
    /// Worker threads [default: all cores]
    #[arg(long, env = "LIDSCOPE_THREADS")]
    pub threads: Option<usize>,
}
