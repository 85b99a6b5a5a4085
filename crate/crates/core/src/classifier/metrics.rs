use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marker::RioMarker;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of gold instances of the class.
    pub support: usize,
}

/// Accuracy plus per-class and macro-averaged precision, recall and F1.
///
/// Macro averages run over the classes present in the gold labels. A zero
/// denominator yields 0 for that precision, recall or F1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub per_class: BTreeMap<RioMarker, ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn metrics(gold: &[RioMarker], pred: &[RioMarker]) -> Result<MetricSet> {
    if gold.len() != pred.len() {
        return Err(Error::InvalidArgument(format!(
            "gold has {} labels but predictions have {}",
            gold.len(),
            pred.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::EmptySample);
    }
    let classes: BTreeSet<RioMarker> = gold.iter().copied().collect();
    let mut per_class = BTreeMap::new();
    for &class in &classes {
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for (&g, &p) in gold.iter().zip(pred) {
            match (g == class, p == class) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => {}
            }
        }
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        per_class.insert(class, ClassMetrics { precision, recall, f1, support: tp + fn_ });
    }
    let k = per_class.len() as f64;
    let correct = gold.iter().zip(pred).filter(|(g, p)| g == p).count();
    Ok(MetricSet {
        accuracy: ratio(correct, gold.len()),
        macro_precision: per_class.values().map(|m| m.precision).sum::<f64>() / k,
        macro_recall: per_class.values().map(|m| m.recall).sum::<f64>() / k,
        macro_f1: per_class.values().map(|m| m.f1).sum::<f64>() / k,
        per_class,
    })
}
