//! The `ccc` command line: `simulate`, `inspect`, `train` and `eval`.
//!
//! Every command takes `--seed`, `--out` and `--config FILE`; the config
//! file holds `key=value` lines whose keys are the long flag names.
//! Flags override the file, which overrides the built-in defaults.

mod commands;
mod settings;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{run, parse_features_source, FeaturesSource};
pub use settings::ConfigFile;

/// Failure classes, each with its own exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flag or config value.
    #[error("config error: {0}")]
    Config(String),
    /// Input data or arguments that violate a contract.
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<ccc_core::Error> for CliError {
    fn from(e: ccc_core::Error) -> Self {
        match e {
            ccc_core::Error::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

/// Parses `args` (without the program name) and runs the command.
pub fn run_args<I, S>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once(std::ffi::OsString::from("ccc")).chain(args.into_iter().map(Into::into));
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Config(e.to_string()))?;
    run(cli)
}

#[derive(Debug, Parser)]
#[command(name = "ccc", version, about = "Learning from sparse crowd annotations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Shared {
    /// Root random seed [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output location
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// key=value config file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a crowd-annotated dataset directory.
    Simulate(SimulateArgs),
    /// Write noise rates, label counts and confusion distances.
    Inspect(InspectArgs),
    /// Train majority vote, CrowdLayer or CCC.
    Train(TrainArgs),
    /// Accuracy of a saved model on labeled features.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub shared: Shared,
    /// `blobs:N=..,C=..,D=..[,spread=..][,test=..]` or `csv:PATH` (id,f0..,label)
    #[arg(long)]
    pub features: Option<String>,
    /// Preset name (IND-I .. IND-IV, COR-I .. COR-IV)
    #[arg(long)]
    pub preset: Option<String>,
    /// JSON pattern list, used instead of a preset
    #[arg(long)]
    pub patterns: Option<PathBuf>,
    /// Annotators per preset pattern group [default: 10]
    #[arg(long)]
    pub per_group: Option<usize>,
    /// Labels kept per instance [default: 3]
    #[arg(long)]
    pub k: Option<usize>,
    /// Beta shape alpha of annotator propensities [default: 1.5]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Beta shape beta [default: 3]
    #[arg(long)]
    pub beta: Option<f64>,
    /// Class count for `csv:` features [default: largest label + 1]
    #[arg(long)]
    pub classes: Option<usize>,
    /// Feature file format: csv or bin [default: csv]
    #[arg(long)]
    pub format: Option<String>,
    /// Also write every annotator's label for every instance (dense.csv)
    #[arg(long)]
    pub dump_dense: bool,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[command(flatten)]
    pub shared: Shared,
    /// Dataset directory
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub shared: Shared,
    /// Dataset directory
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// majority, crowdlayer or ccc [default: ccc]
    #[arg(long)]
    pub algo: Option<String>,
    /// Comma-separated replicate seeds (overrides --seed)
    #[arg(long)]
    pub seeds: Option<String>,
    /// linear or mlp [default: linear]
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub meta_batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Epoch at which lr drops tenfold, or `none`
    #[arg(long)]
    pub lr_decay_epoch: Option<String>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    /// Correction rate
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Meta set size
    #[arg(long)]
    pub meta_size: Option<usize>,
    /// Annotator groups
    #[arg(long)]
    pub groups: Option<usize>,
    /// identity or votes
    #[arg(long)]
    pub confusion_init: Option<String>,
    /// per-iteration or per-epoch
    #[arg(long)]
    pub zero_reset: Option<String>,
    /// joint or per-model
    #[arg(long)]
    pub grouping: Option<String>,
    #[arg(long)]
    pub kmeans_max_iter: Option<usize>,
    /// Fail unless the dataset has this many classes
    #[arg(long)]
    pub classes: Option<usize>,
    /// Fail unless the dataset has this many annotators
    #[arg(long)]
    pub annotators: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub shared: Shared,
    /// Saved model (model.bin, model1.bin, ...)
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Labeled CSV (id,f0,...,label) or a dataset directory
    #[arg(long)]
    pub data: Option<PathBuf>,
}
