use thiserror::Error;

/// Errors produced by the riomark library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed header: {0}")]
    Header(String),

    #[error("line {line}: {reason}")]
    Row { line: u64, reason: String },

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("empty sample")]
    EmptySample,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no features")]
    NoFeatures,

    #[error("training data contains a single class ({0})")]
    SingleClass(String),

    #[error("diverged")]
    Diverged,

    #[error("record should have been filtered")]
    UnfilteredRecord,

    #[error("missing predictions for {} id(s): {}", .0.len(), preview_ids(.0))]
    MissingPredictions(Vec<String>),

    #[error("model was built with tokenizer {found:?}, this build uses {expected:?}")]
    TokenizerMismatch { expected: String, found: String },

    #[error("inconsistent totals: {0}")]
    InconsistentTotals(String),

    #[error("filtered dataset is empty")]
    EmptyDataset,

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn preview_ids(ids: &[String]) -> String {
    const SHOWN: usize = 20;
    let mut out = ids.iter().take(SHOWN).cloned().collect::<Vec<_>>().join(", ");
    if ids.len() > SHOWN {
        out.push_str(&format!(", ... ({} more)", ids.len() - SHOWN));
    }
    out
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
