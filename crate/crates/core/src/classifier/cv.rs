//! k-fold cross-validation harness.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{fit_features, FeatureVector};
use super::logistic::{train_with_validation, Hyper};
use super::metrics::{metrics, ClassMetrics, MetricSet};
use crate::error::{Error, Result};
use crate::marker::RioMarker;
use crate::rng::Substream;
use crate::stats::{mean, population_std};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub best_epoch: usize,
    pub validation_macro_f1: Vec<f64>,
    pub metrics: MetricSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub per_fold: Vec<FoldResult>,
    pub mean: MetricSet,
    /// Population standard deviation across folds.
    pub std: MetricSet,
}

impl CvReport {
    /// "accuracy 89.81 ± 0.83, macro P ..., R ..., F1 ..." in percent.
    pub fn summary(&self) -> String {
        let pm = |m: f64, s: f64| format!("{:.2} ± {:.2}", 100.0 * m, 100.0 * s);
        format!(
            "accuracy {}, macro P {}, macro R {}, macro F1 {}",
            pm(self.mean.accuracy, self.std.accuracy),
            pm(self.mean.macro_precision, self.std.macro_precision),
            pm(self.mean.macro_recall, self.std.macro_recall),
            pm(self.mean.macro_f1, self.std.macro_f1),
        )
    }
}

/// Sizes of `k` contiguous folds over `n` items; the first `n % k` folds
/// hold one extra item.
pub fn fold_sizes(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|i| n / k + usize::from(i < n % k)).collect()
}

/// Seeded permutation of `0..n` cut into contiguous folds.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut Substream::new(seed, "cv-folds").rng());
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for size in fold_sizes(n, k) {
        folds.push(order[start..start + size].to_vec());
        start += size;
    }
    folds
}

/// Seeded train/evaluation split: returns `(train, eval)` index lists, each
/// sorted, with `round(n * eval_fraction)` items (at least one when `n >= 2`)
/// held out.
pub fn holdout_split(n: usize, eval_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&eval_fraction) || n < 2 {
        return Err(Error::InvalidArgument(format!(
            "cannot hold out {eval_fraction} of {n} items"
        )));
    }
    let n_eval = ((n as f64 * eval_fraction).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut Substream::new(seed, "holdout").rng());
    let mut eval = order[..n_eval].to_vec();
    let mut train = order[n_eval..].to_vec();
    eval.sort_unstable();
    train.sort_unstable();
    Ok((train, eval))
}

/// Runs k-fold cross-validation of the TF-IDF + logistic baseline.
///
/// Each fold fits its own vocabulary on the training split, trains with
/// per-epoch checkpointing on held-out macro-F1, and scores the restored
/// model on the held-out fold. Folds run in parallel; results are
/// aggregated in fold order.
pub fn kfold_cv(docs: &[Vec<String>], labels: &[RioMarker], k: usize, hyper: &Hyper) -> Result<CvReport> {
    if docs.len() != labels.len() {
        return Err(Error::InvalidArgument("documents and labels differ in length".into()));
    }
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    if docs.len() < k {
        return Err(Error::InvalidArgument(format!("{} examples cannot fill {k} folds", docs.len())));
    }
    hyper.validate()?;
    let folds = fold_assignment(docs.len(), k, hyper.seed);

    let per_fold = folds
        .par_iter()
        .enumerate()
        .map(|(fold, test_idx)| -> Result<FoldResult> {
            let mut in_test = vec![false; docs.len()];
            test_idx.iter().for_each(|&i| in_test[i] = true);
            let train_idx: Vec<usize> = (0..docs.len()).filter(|&i| !in_test[i]).collect();

            let train_docs: Vec<Vec<String>> = train_idx.iter().map(|&i| docs[i].clone()).collect();
            let vectorizer = fit_features(&train_docs, hyper.min_df)?;
            let encode = |idx: &[usize]| -> Vec<(FeatureVector, RioMarker)> {
                idx.iter().map(|&i| (vectorizer.transform(&docs[i]), labels[i])).collect()
            };
            let train_set = encode(&train_idx);
            let test_set = encode(test_idx);
            let (model, trace) = train_with_validation(&train_set, vectorizer.len(), hyper, &test_set)?;

            let gold: Vec<RioMarker> = test_set.iter().map(|(_, y)| *y).collect();
            let pred: Vec<RioMarker> = test_set.iter().map(|(x, _)| model.predict(x)).collect();
            Ok(FoldResult {
                fold,
                train_size: train_set.len(),
                test_size: test_set.len(),
                best_epoch: trace.best_epoch,
                validation_macro_f1: trace.validation_macro_f1,
                metrics: metrics(&gold, &pred)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let (mean, std) = aggregate(&per_fold);
    Ok(CvReport { k, per_fold, mean, std })
}

fn aggregate(folds: &[FoldResult]) -> (MetricSet, MetricSet) {
    let summarize = |get: &dyn Fn(&MetricSet) -> f64| {
        let v: Vec<f64> = folds.iter().map(|f| get(&f.metrics)).collect();
        (mean(&v), population_std(&v))
    };
    let mut m = MetricSet::default();
    let mut s = MetricSet::default();
    (m.accuracy, s.accuracy) = summarize(&|x| x.accuracy);
    (m.macro_precision, s.macro_precision) = summarize(&|x| x.macro_precision);
    (m.macro_recall, s.macro_recall) = summarize(&|x| x.macro_recall);
    (m.macro_f1, s.macro_f1) = summarize(&|x| x.macro_f1);

    // per-class statistics over the folds where the class occurs in gold
    let mut by_class: BTreeMap<RioMarker, Vec<ClassMetrics>> = BTreeMap::new();
    for f in folds {
        for (&c, &cm) in &f.metrics.per_class {
            by_class.entry(c).or_default().push(cm);
        }
    }
    for (c, list) in by_class {
        let col = |g: fn(&ClassMetrics) -> f64| list.iter().map(g).collect::<Vec<f64>>();
        let (p, r, f1) = (col(|x| x.precision), col(|x| x.recall), col(|x| x.f1));
        let support: usize = list.iter().map(|x| x.support).sum();
        m.per_class.insert(c, ClassMetrics { precision: mean(&p), recall: mean(&r), f1: mean(&f1), support });
        s.per_class.insert(
            c,
            ClassMetrics { precision: population_std(&p), recall: population_std(&r), f1: population_std(&f1), support },
        );
    }
    (m, s)
}
