//! `hawkes`: batch command line for simulating, fitting and analyzing
//! multivariate Hawkes processes.

mod commands;
mod demo;
mod options;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hawkes_core::simulate::Method;

use options::FitOptions;

#[derive(Parser, Debug)]
#[command(name = "hawkes", version, about = "Simulate, fit and analyze multivariate Hawkes processes")]
pub struct Cli {
    /// Worker thread cap (defaults to all cores)
    #[arg(long, global = true, env = "HAWKES_THREADS")]
    pub threads: Option<usize>,
    /// Record measured wall times; without it they are written as zero so
    /// outputs are reproducible byte for byte
    #[arg(long, global = true)]
    pub timing: bool,
    /// Log verbosity (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a corpus from a model file
    Simulate(SimulateArgs),
    /// Fit a model to a corpus
    Fit(FitArgs),
    /// Extract a Granger causality graph
    Granger(GrangerArgs),
    /// Cluster the sequences of a corpus
    Cluster(ClusterArgs),
    /// Pairwise sequence distance matrix
    Distance(DistanceArgs),
    /// Fit a time-varying infectivity model
    Tvhp(TvhpArgs),
    /// Compare learners on held-out data, or score one model
    Eval(EvalArgs),
    /// Time the simulators over a range of horizons
    Benchmark(BenchmarkArgs),
    /// Run the full pipeline on synthetic data and write plot data
    Demo(DemoArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Branch,
    Ogata,
    ExactExp,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Branch => Method::Branch,
            MethodArg::Ogata => Method::Ogata,
            MethodArg::ExactExp => Method::ExactExp,
        }
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Model JSON file
    #[arg(long)]
    pub model: PathBuf,
    /// Simulation algorithm
    #[arg(long, value_enum, default_value = "exact-exp")]
    pub method: MethodArg,
    /// End of the observation window
    #[arg(long)]
    pub t_end: f64,
    /// Number of sequences
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-sequence event cap
    #[arg(long, default_value_t = hawkes_core::simulate::DEFAULT_MAX_EVENTS)]
    pub max_events: usize,
    /// Corpus JSON output
    #[arg(long)]
    pub out: PathBuf,
    /// Also sample the intensity on a grid of this spacing
    #[arg(long)]
    pub intensity_grid: Option<f64>,
    /// Intensity CSV output [default: <out>.intensity.csv]
    #[arg(long)]
    pub intensity_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Corpus JSON file
    #[arg(long)]
    pub data: PathBuf,
    /// JSON or TOML file with learner options; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub options: FitOptions,
    /// Model JSON output
    #[arg(long)]
    pub out: PathBuf,
    /// Fit report JSON output
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GrangerArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub options: FitOptions,
    /// Edge threshold on the infectivity matrix
    #[arg(long, default_value_t = hawkes_core::analyze::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Graph JSON output
    #[arg(long)]
    pub out: PathBuf,
    /// DOT output
    #[arg(long)]
    pub dot: Option<PathBuf>,
    /// Fit report JSON output
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ClusterMethod {
    Mixture,
    Distance,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct CostArgs {
    /// Cost per unit of time shift between matched events
    #[arg(long, default_value_t = 1.0)]
    pub time_cost: f64,
    /// Cost of matching events of different types
    #[arg(long, default_value_t = 1.0)]
    pub mismatch_cost: f64,
    /// Cost of an unmatched event
    #[arg(long, default_value_t = 1.0)]
    pub indel_cost: f64,
}

#[derive(Args, Debug)]
pub struct ClusterArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub method: ClusterMethod,
    /// Number of clusters
    #[arg(long, required_unless_present = "k_max")]
    pub k: Option<usize>,
    /// Choose K in 1..=K_MAX by held-out likelihood (mixture only)
    #[arg(long, conflicts_with = "k")]
    pub k_max: Option<usize>,
    /// Fraction of sequences used for fitting during K selection
    #[arg(long, default_value_t = 0.7)]
    pub train_ratio: f64,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub options: FitOptions,
    #[command(flatten)]
    pub costs: CostArgs,
    /// Cluster result JSON output
    #[arg(long)]
    pub out: PathBuf,
    /// Per-sequence assignment CSV output
    #[arg(long)]
    pub assignments: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DistanceArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub costs: CostArgs,
    /// Distance matrix CSV output
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TvhpArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Grid nodes, comma separated
    #[arg(long, value_delimiter = ',', conflicts_with = "nodes")]
    pub grid: Option<Vec<f64>>,
    /// Number of evenly spaced nodes over the observation span
    #[arg(long, default_value_t = 5)]
    pub nodes: usize,
    /// Exponential decay rate
    #[arg(long, default_value_t = 1.0)]
    pub decay: f64,
    /// Weight on squared differences between neighbouring nodes [default: 10]
    #[arg(long)]
    pub smoothness: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Model JSON output
    #[arg(long)]
    pub out: PathBuf,
    /// Long-form CSV output (s, v, u, a)
    #[arg(long)]
    pub long: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Training corpus (or the corpus to score with --model)
    #[arg(long)]
    pub data: PathBuf,
    /// Test corpus; without it --data is split by --train-ratio
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, default_value_t = 0.7)]
    pub train_ratio: f64,
    /// JSON list of learner specs [default: mle, mle-ode and ls]
    #[arg(long)]
    pub specs: Option<PathBuf>,
    /// Ground-truth model for the estimation error columns
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Score this model instead of comparing learners (JSON output)
    #[arg(long, conflicts_with_all = ["specs", "truth", "test"])]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comparison CSV output, or score JSON with --model
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Horizons, comma separated
    #[arg(long, value_delimiter = ',', default_value = "100,200,400,800")]
    pub horizons: Vec<f64>,
    /// Sequences per run
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Benchmark CSV output
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct DemoArgs {
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
