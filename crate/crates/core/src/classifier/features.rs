use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse TF-IDF vector with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().map(|&i| i as usize).zip(self.values.iter().copied())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Unigrams followed by `_`-joined bigrams.
pub fn document_terms(tokens: &[String]) -> Vec<String> {
    let mut terms: Vec<String> = tokens.to_vec();
    terms.extend(tokens.windows(2).map(|w| format!("{}_{}", w[0], w[1])));
    terms
}

/// Fitted vocabulary and inverse document frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VectorizerRepr", into = "VectorizerRepr")]
pub struct Vectorizer {
    terms: Vec<String>,
    idf: Vec<f64>,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VectorizerRepr {
    terms: Vec<String>,
    idf: Vec<f64>,
}

impl From<VectorizerRepr> for Vectorizer {
    fn from(r: VectorizerRepr) -> Self {
        Vectorizer::from_parts(r.terms, r.idf)
    }
}

impl From<Vectorizer> for VectorizerRepr {
    fn from(v: Vectorizer) -> Self {
        VectorizerRepr { terms: v.terms, idf: v.idf }
    }
}

impl Vectorizer {
    fn from_parts(terms: Vec<String>, idf: Vec<f64>) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Self { terms, idf, index }
    }

    /// Terms in feature-id order (lexicographic).
    pub fn vocabulary(&self) -> &[String] {
        &self.terms
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn feature_id(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    /// Term counts weighted by idf, L2-normalized. Unknown terms are ignored.
    pub fn transform(&self, tokens: &[String]) -> FeatureVector {
        let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
        for term in document_terms(tokens) {
            if let Some(id) = self.feature_id(&term) {
                *counts.entry(id).or_insert(0.0) += 1.0;
            }
        }
        let mut v = FeatureVector {
            indices: counts.keys().copied().collect(),
            values: counts.iter().map(|(&id, &tf)| tf * self.idf[id as usize]).collect(),
        };
        let norm = v.norm();
        if norm > 0.0 {
            v.values.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

/// Builds the vocabulary of unigrams and bigrams with document frequency
/// at least `min_df`, with smoothed idf `ln((1 + N) / (1 + df)) + 1`.
pub fn fit_features(corpus: &[Vec<String>], min_df: usize) -> Result<Vectorizer> {
    if corpus.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in corpus {
        let distinct: HashSet<String> = document_terms(doc).into_iter().collect();
        for term in distinct {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let n = corpus.len() as f64;
    let (terms, idf): (Vec<String>, Vec<f64>) = df
        .into_iter()
        .filter(|&(_, d)| d >= min_df)
        .map(|(t, d)| {
            let w = ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0;
            (t, w)
        })
        .unzip();
    if terms.is_empty() {
        return Err(Error::NoFeatures);
    }
    Ok(Vectorizer::from_parts(terms, idf))
}
