//! Command-line front end for `simlearn-core`.
//!
//! Every subcommand reads and writes the file formats owned by the core
//! crate (dataset CSV, model/separator/report JSON). Exit status is 0 on
//! success, 1 for usage or data errors and 2 for numerical failures.

pub mod commands;
pub mod experiment;

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use simlearn_core::NormKind;

pub use experiment::{run_experiment, ExperimentConfig, ExperimentOutput, ExperimentRow, EXPERIMENT_COLUMNS};

#[derive(Debug, Parser)]
#[command(name = "simlearn", version, about = "Regularized bilinear similarity learning and bound certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn a similarity matrix from a labelled CSV dataset
    Train(TrainArgs),
    /// Fit the L1-constrained separator over a learnt similarity
    Separator(SeparatorArgs),
    /// Emit a generalization-bound report for a model and its training data
    Bounds(BoundsArgs),
    /// Evaluate a model (and optionally a separator) on a dataset
    Eval(EvalArgs),
    /// Run a multi-trial bound certification experiment from a JSON config
    #[command(after_long_help = EXPERIMENT_HELP)]
    Experiment(ExperimentArgs),
    /// Check the Khinchin-type moment inequality for Rademacher sums
    Khinchin(KhinchinArgs),
}

const EXPERIMENT_HELP: &str = "\
Writes <output_dir>/experiment.csv (one row per (m, d, norm, trial), in that
order) and <output_dir>/summary.json. CSV columns, in order:

  m, d, norm, trial, seed, lambda, margin, delta, iterations_run, a_norm,
  final_objective, train_similarity_error, holdout_similarity_error,
  similarity_gap, witness_hinge_error, train_hinge_error, holdout_hinge_error,
  holdout_zero_one_error, x_star, r_m_empirical, r_m_std_error, r_m_analytic,
  r_m, theorem1_bound, theorem2_bound, theorem1_violated, theorem2_violated

similarity_gap is holdout minus training similarity error; theorem1_violated
is similarity_gap > theorem1_bound and theorem2_violated is
holdout_hinge_error > theorem2_bound (both 0/1).";

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 2000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1.0)]
    pub step0: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// One of l1, fro, mixed21, trace
    #[arg(long)]
    pub norm: NormKind,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub margin: f64,
    /// Relative improvement over 50 iterations below which training stops (0 disables)
    #[arg(long, default_value_t = 1e-8)]
    pub rel_tol: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SeparatorArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = simlearn_core::bounds::DEFAULT_DELTA)]
    pub delta: f64,
    #[arg(long, default_value_t = 1000)]
    pub mc_draws: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub separator: Option<PathBuf>,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct KhinchinArgs {
    /// Comma-separated coefficients for a single check; omit for a random sweep
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub f: Option<Vec<f64>>,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 4.0)]
    pub q: f64,
    /// Monte-Carlo draws instead of exact enumeration
    #[arg(long)]
    pub draws: Option<usize>,
    /// Random sweep size (n ≤ --max-n, p ∈ {1.5, 2}, q ∈ {3, 4, 6})
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 12)]
    pub max_n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write CSV rows here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(simlearn_core::Error),
    Context(String, simlearn_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) | CliError::Context(_, e) => {
                if e.is_numeric() {
                    2
                } else {
                    1
                }
            }
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Context(ctx, e) => write!(f, "{ctx}: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<simlearn_core::Error> for CliError {
    fn from(e: simlearn_core::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| {
        CliError::Core(simlearn_core::Error::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

pub(crate) fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| {
        CliError::Core(simlearn_core::Error::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

/// Runs one parsed command, returning the text to print on stdout.
pub fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Train(a) => commands::train(&a),
        Command::Separator(a) => commands::separator(&a),
        Command::Bounds(a) => commands::bounds(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Experiment(a) => commands::experiment(&a),
        Command::Khinchin(a) => commands::khinchin(&a),
    }
}
