//! Built-in Rio marker classifier and the prediction interface.
//!
//! The estimator downstream only consumes markers, so any model that can
//! write an `id,predicted_marker` file plugs in through
//! [`predictions::load_external_predictions`]. The built-in model is TF-IDF
//! over unigrams and bigrams feeding a multinomial logistic regression.

pub mod cv;
pub mod features;
pub mod logistic;
pub mod metrics;
pub mod model;
pub mod predictions;

pub use cv::{fold_sizes, holdout_split, kfold_cv, CvReport, FoldResult};
pub use features::{fit_features, FeatureVector, Vectorizer};
pub use logistic::{softmax, train, train_with_validation, Hyper, SoftmaxRegression, TrainingTrace};
pub use metrics::{metrics, ClassMetrics, MetricSet};
pub use model::LinearModel;
pub use predictions::{load_external_predictions, PredictionSet, PredictionSource};

/// Identifies the tokenization rules; stored in model files.
pub const TOKENIZER_VERSION: &str = "riomark-tok-1";

/// Lowercases and splits on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Climate-proofing roads"), ["climate", "proofing", "roads"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("résilience 2012"), ["résilience", "2012"]);
        assert_eq!(tokenize("A b"), ["a", "b"]);
    }
}
