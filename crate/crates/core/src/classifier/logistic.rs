//! Multinomial logistic regression on sparse features.
//!
//! Minimizes mean cross-entropy plus `(l2 / 2) * ||W||^2` (bias excluded) by
//! seeded mini-batch gradient descent. The L2 term is applied as an exact
//! proximal shrink after each step, `W <- (W - lr * g) / (1 + lr * l2)`,
//! which stays stable for any penalty strength.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::features::FeatureVector;
use super::metrics::metrics;
use crate::error::{Error, Result};
use crate::marker::RioMarker;
use crate::rng::Substream;

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub l2: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub min_df: usize,
    pub seed: u64,
}

impl Default for Hyper {
    fn default() -> Self {
        Self { l2: 1e-4, lr: 0.5, epochs: 30, batch_size: 32, min_df: 1, seed: 0 }
    }
}

impl Hyper {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return bad(format!("l2 must be finite and non-negative, got {}", self.l2));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be at least 1".into());
        }
        Ok(())
    }
}

/// Weights and biases of a softmax classifier over a fixed feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxRegression {
    /// Ascending marker order; class `c` owns row `c` of `weights`.
    pub classes: Vec<RioMarker>,
    pub num_features: usize,
    /// Row-major `classes.len() x num_features`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl SoftmaxRegression {
    pub fn zeros(classes: Vec<RioMarker>, num_features: usize) -> Self {
        let c = classes.len();
        Self { classes, num_features, weights: vec![0.0; c * num_features], bias: vec![0.0; c] }
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn weight(&self, class: usize, feature: usize) -> f64 {
        self.weights[class * self.num_features + feature]
    }

    pub fn scores(&self, x: &FeatureVector) -> Vec<f64> {
        (0..self.num_classes())
            .map(|c| {
                let row = &self.weights[c * self.num_features..(c + 1) * self.num_features];
                self.bias[c] + x.iter().filter(|&(j, _)| j < self.num_features).map(|(j, v)| row[j] * v).sum::<f64>()
            })
            .collect()
    }

    pub fn probabilities(&self, x: &FeatureVector) -> Vec<f64> {
        softmax(&self.scores(x))
    }

    /// Highest-scoring class; exact ties go to the lower marker.
    pub fn predict(&self, x: &FeatureVector) -> RioMarker {
        let scores = self.scores(x);
        let mut best = 0;
        for (c, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = c;
            }
        }
        self.classes[best]
    }

    fn class_index(&self, m: RioMarker) -> Option<usize> {
        self.classes.binary_search(&m).ok()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

/// Numerically stable softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

fn log_sum_exp(scores: &[f64]) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln()
}

/// Regularized training objective: mean cross-entropy + (l2/2)·||W||².
pub fn objective(model: &SoftmaxRegression, data: &[(FeatureVector, RioMarker)], l2: f64) -> f64 {
    let mut ce = 0.0;
    for (x, y) in data {
        let scores = model.scores(x);
        let c = model.class_index(*y).expect("label outside model classes");
        ce += log_sum_exp(&scores) - scores[c];
    }
    let penalty = 0.5 * l2 * model.weights.iter().map(|w| w * w).sum::<f64>();
    ce / data.len() as f64 + penalty
}

/// Analytic gradient of [`objective`] with respect to (weights, bias).
pub fn gradient(model: &SoftmaxRegression, data: &[(FeatureVector, RioMarker)], l2: f64) -> (Vec<f64>, Vec<f64>) {
    let f = model.num_features;
    let mut gw: Vec<f64> = model.weights.iter().map(|w| l2 * w).collect();
    let mut gb = vec![0.0; model.num_classes()];
    let scale = 1.0 / data.len() as f64;
    for (x, y) in data {
        let residual = residuals(model, x, *y);
        for (c, r) in residual.iter().enumerate() {
            gb[c] += scale * r;
            for (j, v) in x.iter() {
                gw[c * f + j] += scale * r * v;
            }
        }
    }
    (gw, gb)
}

/// `softmax(scores) - onehot(y)`.
fn residuals(model: &SoftmaxRegression, x: &FeatureVector, y: RioMarker) -> Vec<f64> {
    let mut p = model.probabilities(x);
    let c = model.class_index(y).expect("label outside model classes");
    p[c] -= 1.0;
    p
}

/// Per-epoch record of a training run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub epoch_objective: Vec<f64>,
    /// Macro-F1 on the validation split after each epoch (empty without one).
    pub validation_macro_f1: Vec<f64>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
}

pub fn train(examples: &[(FeatureVector, RioMarker)], num_features: usize, hyper: &Hyper) -> Result<SoftmaxRegression> {
    train_with_validation(examples, num_features, hyper, &[]).map(|(m, _)| m)
}

/// Trains, and when `validation` is non-empty keeps the epoch with the best
/// validation macro-F1 (earliest on ties).
pub fn train_with_validation(
    examples: &[(FeatureVector, RioMarker)],
    num_features: usize,
    hyper: &Hyper,
    validation: &[(FeatureVector, RioMarker)],
) -> Result<(SoftmaxRegression, TrainingTrace)> {
    hyper.validate()?;
    let mut classes: Vec<RioMarker> = examples.iter().map(|(_, y)| *y).collect();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        let which = classes.first().map(|c| c.to_string()).unwrap_or_else(|| "none".into());
        return Err(Error::SingleClass(which));
    }
    let mut model = SoftmaxRegression::zeros(classes, num_features);
    let mut trace = TrainingTrace::default();
    let mut best: Option<(f64, SoftmaxRegression)> = None;

    let mut rng = Substream::new(hyper.seed, "train-shuffle").rng();
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let shrink = 1.0 / (1.0 + hyper.lr * hyper.l2);
    let f = num_features;

    for epoch in 1..=hyper.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(hyper.batch_size) {
            let step = hyper.lr / batch.len() as f64;
            let batch_residuals: Vec<Vec<f64>> =
                batch.iter().map(|&i| residuals(&model, &examples[i].0, examples[i].1)).collect();
            for (&i, residual) in batch.iter().zip(&batch_residuals) {
                let x = &examples[i].0;
                for (c, r) in residual.iter().enumerate() {
                    model.bias[c] -= step * r;
                    for (j, v) in x.iter() {
                        model.weights[c * f + j] -= step * r * v;
                    }
                }
            }
            if hyper.l2 > 0.0 {
                model.weights.iter_mut().for_each(|w| *w *= shrink);
            }
        }
        let loss = objective(&model, examples, hyper.l2);
        if !loss.is_finite() || !model.is_finite() {
            return Err(Error::Diverged);
        }
        trace.epoch_objective.push(loss);

        if !validation.is_empty() {
            let gold: Vec<RioMarker> = validation.iter().map(|(_, y)| *y).collect();
            let pred: Vec<RioMarker> = validation.iter().map(|(x, _)| model.predict(x)).collect();
            let f1 = metrics(&gold, &pred)?.macro_f1;
            trace.validation_macro_f1.push(f1);
            if best.as_ref().is_none_or(|(b, _)| f1 > *b) {
                best = Some((f1, model.clone()));
                trace.best_epoch = epoch;
            }
        }
    }
    match best {
        Some((_, kept)) => Ok((kept, trace)),
        None => {
            trace.best_epoch = hyper.epochs;
            Ok((model, trace))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fv(pairs: &[(u32, f64)]) -> FeatureVector {
        FeatureVector { indices: pairs.iter().map(|p| p.0).collect(), values: pairs.iter().map(|p| p.1).collect() }
    }

    /// Two classes on disjoint features.
    fn separable() -> Vec<(FeatureVector, RioMarker)> {
        (0..10)
            .map(|i| {
                if i % 2 == 0 {
                    (fv(&[(0, 0.8), (1, 0.6)]), RioMarker::NotTargeted)
                } else {
                    (fv(&[(2, 0.6), (3, 0.8)]), RioMarker::Principal)
                }
            })
            .collect()
    }

    fn random_instance(seed: u64) -> (SoftmaxRegression, Vec<(FeatureVector, RioMarker)>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = rng.random_range(1..=5usize);
        let classes = vec![RioMarker::NotTargeted, RioMarker::Significant, RioMarker::Principal];
        let mut model = SoftmaxRegression::zeros(classes.clone(), f);
        model.weights.iter_mut().for_each(|w| *w = rng.random_range(-1.0..1.0));
        model.bias.iter_mut().for_each(|b| *b = rng.random_range(-1.0..1.0));
        let data = (0..rng.random_range(1..8))
            .map(|_| {
                let mut pairs = Vec::new();
                for j in 0..f as u32 {
                    if rng.random_bool(0.7) {
                        pairs.push((j, rng.random_range(-2.0..2.0)));
                    }
                }
                let x = fv(&pairs);
                (x, classes[rng.random_range(0..3)])
            })
            .collect();
        (model, data)
    }

    #[test]
    fn gradient_matches_central_differences() {
        for seed in 0..20 {
            let (model, data) = random_instance(seed);
            let l2 = 0.1;
            let (gw, gb) = gradient(&model, &data, l2);
            let h = 1e-5;
            let check = |analytic: f64, bump: &dyn Fn(f64) -> SoftmaxRegression| {
                let numeric = (objective(&bump(h), &data, l2) - objective(&bump(-h), &data, l2)) / (2.0 * h);
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
                assert!(rel < 1e-4, "seed {seed}: analytic {analytic} numeric {numeric}");
            };
            for k in 0..model.weights.len() {
                check(gw[k], &|d| {
                    let mut m = model.clone();
                    m.weights[k] += d;
                    m
                });
            }
            for k in 0..model.bias.len() {
                check(gb[k], &|d| {
                    let mut m = model.clone();
                    m.bias[k] += d;
                    m
                });
            }
        }
    }

    #[test]
    fn separable_fit_is_perfect() {
        let data = separable();
        let model = train(&data, 4, &Hyper { epochs: 50, ..Hyper::default() }).unwrap();
        for (x, y) in &data {
            assert_eq!(model.predict(x), *y);
        }
    }

    #[test]
    fn huge_penalty_collapses_to_majority() {
        let mut data = separable();
        data.push((fv(&[(0, 1.0)]), RioMarker::NotTargeted));
        data.push((fv(&[(1, 1.0)]), RioMarker::NotTargeted));
        let model = train(&data, 4, &Hyper { l2: 1e6, ..Hyper::default() }).unwrap();
        assert!(model.weights.iter().all(|w| w.abs() < 1e-6));
        for (x, _) in &data {
            assert_eq!(model.predict(x), RioMarker::NotTargeted);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let data = separable();
        let h = Hyper { seed: 9, batch_size: 3, ..Hyper::default() };
        assert_eq!(train(&data, 4, &h).unwrap(), train(&data, 4, &h).unwrap());
    }

    #[test]
    fn single_class_rejected() {
        let data = vec![(fv(&[(0, 1.0)]), RioMarker::Principal); 3];
        assert!(matches!(train(&data, 1, &Hyper::default()), Err(Error::SingleClass(_))));
    }

    #[test]
    fn bias_only_prediction_and_ties() {
        let mut m = SoftmaxRegression::zeros(vec![RioMarker::NotTargeted, RioMarker::Significant], 2);
        m.bias = vec![0.5, 0.1];
        assert_eq!(m.predict(&FeatureVector::default()), RioMarker::NotTargeted);

        let mut m = SoftmaxRegression::zeros(vec![RioMarker::NotTargeted, RioMarker::Significant, RioMarker::Principal], 1);
        m.bias = vec![-1.0, 2.0, 2.0];
        assert_eq!(m.predict(&fv(&[(0, 1.0)])), RioMarker::Significant);
    }

    #[test]
    fn validation_checkpoint_records_every_epoch() {
        let data = separable();
        let h = Hyper { epochs: 7, ..Hyper::default() };
        let (_, trace) = train_with_validation(&data, 4, &h, &data).unwrap();
        assert_eq!(trace.validation_macro_f1.len(), 7);
        assert_eq!(trace.epoch_objective.len(), 7);
        let best = trace.validation_macro_f1[trace.best_epoch - 1];
        assert!(trace.validation_macro_f1.iter().all(|&f| f <= best));
    }

    proptest! {
        #[test]
        fn softmax_is_a_simplex(scores in prop::collection::vec(-50.0f64..50.0, 1..6)) {
            let p = softmax(&scores);
            prop_assert!(p.iter().all(|&v| v >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
