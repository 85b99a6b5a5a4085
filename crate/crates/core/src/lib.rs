//! Estimation of Rio marker overreporting in aid activity records.
//!
//! Records are flagged as overreported when their reported climate
//! adaptation marker exceeds a classifier's marker. The raw rate is then
//! rescaled by a correction factor estimated on a small calibration set
//! annotated under a stricter scheme, with Beta posteriors and Monte Carlo
//! propagation giving 95% credible intervals.
//!
//! Module map:
//! - [`ingest`]: record, gold-label and filter handling
//! - [`text`]: classifier input assembly, language tags, duplicates
//! - [`classifier`]: TF-IDF + logistic baseline, CV harness, external predictions
//! - [`estimator`]: overreporting flags and stratified rates
//! - [`bayes`]: posteriors, correction factor, corrected rates
//! - [`diagnostics`]: length analysis and short-text re-runs
//! - [`pipeline`]: one estimation pass over all of the above

pub mod bayes;
pub mod classifier;
pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod ingest;
pub mod marker;
pub mod pipeline;
pub mod rng;
pub mod special;
pub mod stats;
pub mod synth;
pub mod table;
pub mod text;

pub use bayes::{
    beta_posterior, conditional_counts, corrected_rate, correction_factor, sample_beta, BetaPosterior,
    ConditionalCounts, CorrectedEstimate, CorrectionFactor, PairedFlags,
};
pub use classifier::{kfold_cv, metrics, tokenize, CvReport, Hyper, LinearModel, MetricSet, PredictionSet};
pub use diagnostics::{agreement_by_length, iqr_cutoff, rerun_excluding_short, AgreementBin, ExcludeShort, LengthReport};
pub use error::{Error, Result};
pub use estimator::{flag, stratified_rates, GroupBy, OverreportFlag, RateSummary};
pub use ingest::{apply_filter, join_gold, parse_records, ActivityRecord, DatasetFilter, GoldLabel};
pub use marker::{effective_marker, RioMarker};
pub use pipeline::{run_estimate, EstimateConfig, EstimateInputs, EstimateRun};
pub use table::{InputFormat, SkippedRow};
pub use text::{assemble_text, find_duplicates, max_agreement_bound, DuplicateGroup, LengthSource, PreparedText};
