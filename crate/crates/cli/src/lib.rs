//! The `riomark` command line: argument definitions, input loading and the
//! five subcommands.

pub mod commands;
pub mod config;
pub mod load;
pub mod output;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Exit code for success.
pub const EXIT_OK: i32 = 0;
/// I/O or other runtime failure.
pub const EXIT_RUNTIME: i32 = 1;
/// Bad flags, config values or arguments.
pub const EXIT_USAGE: i32 = 2;
/// Malformed or inconsistent input data.
pub const EXIT_INPUT: i32 = 3;
/// In-scope records without a prediction.
pub const EXIT_MISSING_PREDICTIONS: i32 = 4;
/// Training or sampling could not produce a usable result.
pub const EXIT_NUMERICAL: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "riomark", version, about = "Estimate Rio marker overreporting from activity descriptions")]
pub struct Cli {
    /// Flat `key = value` config file; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the baseline classifier on gold-labelled records.
    Train(TrainArgs),
    /// k-fold cross-validation of the baseline classifier.
    Cv(CvArgs),
    /// Predict markers for a record file with a trained model.
    Predict(PredictArgs),
    /// Overreporting rates with the Bayesian correction.
    Estimate(EstimateArgs),
    /// Length, agreement and duplicate diagnostics.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct HyperArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// L2 penalty.
    #[arg(long)]
    pub l2: Option<f64>,
    /// Learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Minimum document frequency for a feature.
    #[arg(long)]
    pub min_df: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct InputArgs {
    /// Abort on the first malformed row instead of skipping it.
    #[arg(long)]
    pub strict: bool,
    /// Put the short description into the classifier text.
    #[arg(long)]
    pub include_short_description: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FilterArgs {
    /// Keep only these donors (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub donors: Option<Vec<String>>,
    /// Keep only France, Germany, Japan, the United Kingdom and the United States.
    #[arg(long, conflicts_with = "donors")]
    pub top_five: bool,
    /// Inclusive year range, e.g. `2010-2019`.
    #[arg(long, value_name = "FROM-TO")]
    pub year_range: Option<String>,
    /// Lowest reported marker kept in the analysis frame (0, 1 or 2).
    #[arg(long)]
    pub min_reported_marker: Option<u8>,
    /// Text used for lengths: `long_description` or `assembled`.
    #[arg(long)]
    pub length_source: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Record file (CSV or JSON-Lines).
    #[arg(long)]
    pub data: PathBuf,
    /// Gold labels, `id,gold_marker`.
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub model_out: PathBuf,
    /// Report directory for the evaluation and CV results.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run k-fold cross-validation before training.
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CvArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    /// Number of folds (default 10).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub records: PathBuf,
    /// Trained model used to predict the records.
    #[arg(long, required_unless_present = "predictions", conflicts_with = "predictions")]
    pub model: Option<PathBuf>,
    /// External predictions, `id,predicted_marker`.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Calibration pairs, `id,w_flag,c_flag[,char_length]`.
    #[arg(long, required_unless_present = "calibration_records", conflicts_with = "calibration_records")]
    pub calibration: Option<PathBuf>,
    /// Records of a re-evaluated sample; calibration pairs are derived from
    /// these, `--calibration-gold` and the predictions.
    #[arg(long, requires = "calibration_gold")]
    pub calibration_records: Option<PathBuf>,
    #[arg(long, requires = "calibration_records")]
    pub calibration_gold: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo draws per posterior.
    #[arg(long)]
    pub samples: Option<usize>,
    /// `auto` (IQR fence), a length in characters, or `off`.
    #[arg(long)]
    pub exclude_short: Option<String>,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long, conflicts_with = "predictions")]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Language tags, `id,language_tag`; records without a tag column are
    /// otherwise tagged heuristically.
    #[arg(long)]
    pub language_tags: Option<PathBuf>,
    /// Number of log-length bins for the agreement curve (default 20).
    #[arg(long)]
    pub bins: Option<usize>,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub out: PathBuf,
}

/// A bad flag or config value detected after argument parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Maps an error to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use riomark_core::Error as E;
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::InvalidArgument(_) => EXIT_USAGE,
                E::MissingPredictions(_) => EXIT_MISSING_PREDICTIONS,
                E::NoFeatures | E::SingleClass(_) | E::Diverged | E::EmptySample => EXIT_NUMERICAL,
                E::Io(_) => EXIT_RUNTIME,
                E::Header(_)
                | E::Row { .. }
                | E::DuplicateId(_)
                | E::UnfilteredRecord
                | E::TokenizerMismatch { .. }
                | E::InconsistentTotals(_)
                | E::EmptyDataset
                | E::Csv(_)
                | E::Json(_) => EXIT_INPUT,
            };
        }
    }
    EXIT_RUNTIME
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = match &cli.config {
        Some(path) => config::ConfigFile::load(path).map_err(|e| UsageError(format!("{e:#}")))?,
        None => config::ConfigFile::default(),
    };
    match &cli.command {
        Command::Train(a) => commands::train(&cfg, a),
        Command::Cv(a) => commands::cv(&cfg, a),
        Command::Predict(a) => commands::predict(&cfg, a),
        Command::Estimate(a) => commands::estimate(&cfg, a),
        Command::Diagnose(a) => commands::diagnose(&cfg, a),
    }
}
