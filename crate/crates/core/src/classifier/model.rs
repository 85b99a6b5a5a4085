//! The trained text classifier and its on-disk container.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{fit_features, Vectorizer};
use super::logistic::{train_with_validation, Hyper, SoftmaxRegression, TrainingTrace};
use super::predictions::{PredictionSet, PredictionSource};
use super::{tokenize, TOKENIZER_VERSION};
use crate::error::{Error, Result};
use crate::ingest::ActivityRecord;
use crate::marker::RioMarker;
use crate::text::{assemble_text_with, PreparedText, TextOptions};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Vocabulary, idf and softmax parameters, plus the settings needed to
/// rebuild inputs the same way at prediction time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub format_version: u32,
    pub tokenizer_version: String,
    pub text_options: TextOptions,
    pub hyper: Hyper,
    pub vectorizer: Vectorizer,
    pub regression: SoftmaxRegression,
}

impl LinearModel {
    /// Fits vocabulary and weights on `texts`. When `validation` is given the
    /// best epoch by validation macro-F1 is kept.
    pub fn fit(
        texts: &[&str],
        labels: &[RioMarker],
        hyper: &Hyper,
        text_options: TextOptions,
        validation: Option<(&[&str], &[RioMarker])>,
    ) -> Result<(Self, TrainingTrace)> {
        if texts.len() != labels.len() {
            return Err(Error::InvalidArgument("texts and labels differ in length".into()));
        }
        let docs: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t)).collect();
        let vectorizer = fit_features(&docs, hyper.min_df)?;
        let train_set: Vec<_> = docs.iter().map(|d| vectorizer.transform(d)).zip(labels.iter().copied()).collect();
        let val_set: Vec<_> = match validation {
            Some((vt, vl)) => vt.iter().map(|t| vectorizer.transform(&tokenize(t))).zip(vl.iter().copied()).collect(),
            None => Vec::new(),
        };
        let (regression, trace) = train_with_validation(&train_set, vectorizer.len(), hyper, &val_set)?;
        Ok((
            Self {
                format_version: MODEL_FORMAT_VERSION,
                tokenizer_version: TOKENIZER_VERSION.to_string(),
                text_options,
                hyper: *hyper,
                vectorizer,
                regression,
            },
            trace,
        ))
    }

    pub fn classes(&self) -> &[RioMarker] {
        &self.regression.classes
    }

    pub fn predict_text(&self, text: &str) -> RioMarker {
        self.regression.predict(&self.vectorizer.transform(&tokenize(text)))
    }

    pub fn predict(&self, text: &PreparedText) -> RioMarker {
        self.predict_text(&text.text)
    }

    /// Predicts every record from its assembled text.
    pub fn predict_records(&self, records: &[ActivityRecord]) -> PredictionSet {
        let predictions = records
            .par_iter()
            .map(|r| (r.id.clone(), self.predict(&assemble_text_with(r, self.text_options))))
            .collect();
        PredictionSet { source: PredictionSource::Builtin, predictions }
    }

    pub fn write_json<W: Write>(&self, sink: W) -> Result<()> {
        serde_json::to_writer(sink, self)?;
        Ok(())
    }

    /// Loads a model, refusing files written under another tokenizer.
    pub fn read_json<R: Read>(source: R) -> Result<Self> {
        let model: LinearModel = serde_json::from_reader(source)?;
        if model.tokenizer_version != TOKENIZER_VERSION {
            return Err(Error::TokenizerMismatch {
                expected: TOKENIZER_VERSION.into(),
                found: model.tokenizer_version,
            });
        }
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidArgument(format!("unsupported model format {}", model.format_version)));
        }
        let r = &model.regression;
        if r.num_features != model.vectorizer.len()
            || r.weights.len() != r.classes.len() * r.num_features
            || r.bias.len() != r.classes.len()
            || !r.is_finite()
        {
            return Err(Error::InvalidArgument("model parameters are inconsistent".into()));
        }
        Ok(model)
    }
}
