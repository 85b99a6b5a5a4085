//! Annotation-scheme correction.
//!
//! On a calibration set annotated under both schemes, W marks records the
//! classifier flags as overreported and C those the high-quality
//! re-evaluation flags. The corrected population rate is
//!
//! ```text
//! P(C) = P(C | W) / P(W | C) * P(W)
//! ```
//!
//! with each conditional probability given a Beta(1 + n, 1 + m) posterior
//! (uniform prior, n agreeing and m disagreeing records). Uncertainty is
//! propagated by Monte Carlo: the two posteriors are sampled on independent
//! substreams and the ratio samples are multiplied into the raw rate.

use std::collections::HashSet;
use std::io::Read;

use log::warn;
use rand::Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Substream, BLOCK_LEN};
use crate::special::{inverse_regularized_incomplete_beta, regularized_incomplete_beta};
use crate::stats::{quantile_sorted, sort_floats};
use crate::table::{parse_flag, parse_integer, read_rows, InputFormat, SkippedRow};

pub const DEFAULT_SAMPLES: usize = 100_000;
/// Conditional sample spaces smaller than this trigger a warning.
pub const SMALL_SAMPLE_WARNING: usize = 10;
const MIN_DRAW: f64 = 1e-300;

/// Both overreporting flags for one calibration record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairedFlags {
    pub id: String,
    /// Classifier-scheme flag (event W).
    pub w: bool,
    /// High-quality-scheme flag (event C).
    pub c: bool,
    /// Text length, when known; needed for short-text exclusion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub char_length: Option<usize>,
}

impl PairedFlags {
    pub fn new(id: impl Into<String>, w: bool, c: bool) -> Self {
        Self { id: id.into(), w, c, char_length: None }
    }
}

/// Agreement counts `(n, m)` for each conditional.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionalCounts {
    /// Among W: (C and W, not C and W).
    pub c_given_w: (u64, u64),
    /// Among C: (W and C, not W and C).
    pub w_given_c: (u64, u64),
}

pub fn conditional_counts(pairs: &[PairedFlags]) -> Result<ConditionalCounts> {
    if pairs.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut counts = ConditionalCounts::default();
    for p in pairs {
        if p.w {
            if p.c {
                counts.c_given_w.0 += 1;
            } else {
                counts.c_given_w.1 += 1;
            }
        }
        if p.c {
            if p.w {
                counts.w_given_c.0 += 1;
            } else {
                counts.w_given_c.1 += 1;
            }
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPosterior {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaPosterior {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta shape ({alpha}, {beta}) must be positive")));
        }
        Ok(Self { alpha, beta })
    }

    /// Beta(1 + n, 1 + m).
    pub fn from_counts(n: u64, m: u64) -> Self {
        Self { alpha: 1.0 + n as f64, beta: 1.0 + m as f64 }
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    pub fn variance(&self) -> f64 {
        let s = self.alpha + self.beta;
        self.alpha * self.beta / (s * s * (s + 1.0))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        regularized_incomplete_beta(self.alpha, self.beta, x)
    }

    /// Inverse CDF by bisection to within 1e-10.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        inverse_regularized_incomplete_beta(self.alpha, self.beta, p, 1e-10)
    }

    /// Equal-tailed 95% interval.
    pub fn credible_interval_95(&self) -> Result<(f64, f64)> {
        Ok((self.quantile(0.025)?, self.quantile(0.975)?))
    }
}

/// Beta(1 + n, 1 + m) from signed counts; negative counts are rejected.
pub fn beta_posterior(n: i64, m: i64) -> Result<BetaPosterior> {
    if n < 0 || m < 0 {
        return Err(Error::InvalidArgument(format!("counts ({n}, {m}) must be non-negative")));
    }
    Ok(BetaPosterior::from_counts(n as u64, m as u64))
}

/// `n_samples` draws from `p` on the substream (seed, "beta").
pub fn sample_beta(p: &BetaPosterior, n_samples: usize, seed: u64) -> Result<Vec<f64>> {
    sample_beta_on(p, n_samples, &Substream::new(seed, "beta"))
}

/// Draws in blocks of [`BLOCK_LEN`]; block `i` uses generator `i` of the
/// substream, so the sequence is independent of the thread count.
pub fn sample_beta_on(p: &BetaPosterior, n_samples: usize, stream: &Substream) -> Result<Vec<f64>> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    let dist = Beta::new(p.alpha, p.beta).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let blocks = n_samples.div_ceil(BLOCK_LEN);
    let chunks: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let len = BLOCK_LEN.min(n_samples - block * BLOCK_LEN);
            let mut rng = stream.block_rng(block as u64);
            (0..len).map(|_| draw_positive(&dist, &mut rng)).collect()
        })
        .collect();
    Ok(chunks.concat())
}

fn draw_positive<R: Rng>(dist: &Beta<f64>, rng: &mut R) -> f64 {
    loop {
        let x = dist.sample(rng);
        if x >= MIN_DRAW {
            return x;
        }
    }
}

/// Point estimate and equal-tailed 95% interval of sampled values.
fn summarize(samples: &[f64]) -> Result<(f64, (f64, f64))> {
    let mut sorted = samples.to_vec();
    sort_floats(&mut sorted);
    Ok((
        quantile_sorted(&sorted, 0.5)?,
        (quantile_sorted(&sorted, 0.025)?, quantile_sorted(&sorted, 0.975)?),
    ))
}

/// Monte Carlo distribution of `P(C|W) / P(W|C)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionFactor {
    #[serde(skip)]
    pub samples: Vec<f64>,
    /// Sample median.
    pub point: f64,
    pub ci95: (f64, f64),
    pub seed: u64,
    pub n_samples: usize,
    pub counts: Option<ConditionalCounts>,
}

impl CorrectionFactor {
    /// Wraps precomputed ratio samples.
    pub fn from_samples(samples: Vec<f64>, seed: u64) -> Result<Self> {
        if samples.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidArgument("ratio samples must be positive and finite".into()));
        }
        let (point, ci95) = summarize(&samples)?;
        Ok(Self { n_samples: samples.len(), samples, point, ci95, seed, counts: None })
    }

    /// A single fixed ratio.
    pub fn degenerate(ratio: f64) -> Result<Self> {
        Self::from_samples(vec![ratio], 0)
    }

    /// The factor report as a JSON object:
    /// `{point, ci95_lo, ci95_hi, n_samples, seed, counts: {c_given_w, w_given_c}}`.
    pub fn to_json(&self) -> serde_json::Value {
        let counts = self.counts.map(|c| {
            serde_json::json!({
                "c_given_w": [c.c_given_w.0, c.c_given_w.1],
                "w_given_c": [c.w_given_c.0, c.w_given_c.1],
            })
        });
        serde_json::json!({
            "point": self.point,
            "ci95_lo": self.ci95.0,
            "ci95_hi": self.ci95.1,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "counts": counts,
        })
    }
}

pub fn correction_factor(pairs: &[PairedFlags], n_samples: usize, seed: u64) -> Result<CorrectionFactor> {
    correction_factor_from_counts(conditional_counts(pairs)?, n_samples, seed)
}

pub fn correction_factor_from_counts(counts: ConditionalCounts, n_samples: usize, seed: u64) -> Result<CorrectionFactor> {
    let (cw, wc) = (counts.c_given_w, counts.w_given_c);
    if cw.0 + cw.1 < SMALL_SAMPLE_WARNING as u64 || wc.0 + wc.1 < SMALL_SAMPLE_WARNING as u64 {
        warn!(
            "small calibration sample: {} records with W, {} with C",
            cw.0 + cw.1,
            wc.0 + wc.1
        );
    }
    let c_given_w = sample_beta_on(&BetaPosterior::from_counts(cw.0, cw.1), n_samples, &Substream::new(seed, "c-given-w"))?;
    let w_given_c = sample_beta_on(&BetaPosterior::from_counts(wc.0, wc.1), n_samples, &Substream::new(seed, "w-given-c"))?;
    let ratios: Vec<f64> = c_given_w.iter().zip(&w_given_c).map(|(a, b)| a / b).collect();
    let mut cf = CorrectionFactor::from_samples(ratios, seed)?;
    cf.counts = Some(counts);
    Ok(cf)
}

/// A corrected overreporting rate with its 95% credible interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectedEstimate {
    pub raw_rate: f64,
    pub point: f64,
    pub ci95: (f64, f64),
}

/// Multiplies `raw` into every factor sample, clamps to [0, 1], and
/// summarizes with the median and 2.5/97.5 percentiles.
pub fn corrected_rate(raw: f64, cf: &CorrectionFactor) -> Result<CorrectedEstimate> {
    if !(0.0..=1.0).contains(&raw) {
        return Err(Error::InvalidArgument(format!("raw rate {raw} outside [0, 1]")));
    }
    if cf.samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let corrected: Vec<f64> = cf.samples.iter().map(|r| (raw * r).clamp(0.0, 1.0)).collect();
    let (point, ci95) = summarize(&corrected)?;
    Ok(CorrectedEstimate { raw_rate: raw, point, ci95 })
}

/// Reads calibration flags: `id,w_flag,c_flag` plus an optional
/// `char_length` column.
pub fn parse_paired_flags<R: Read>(source: R, format: InputFormat) -> Result<(Vec<PairedFlags>, Vec<SkippedRow>)> {
    let rows = read_rows(source, format, &["id", "w_flag", "c_flag"])?;
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    let mut seen = HashSet::new();
    for row in rows {
        let parsed = (|| {
            if let Some(reason) = &row.broken {
                return Err(reason.clone());
            }
            let id = row.non_empty("id").ok_or("missing id")?;
            let flag = |name: &str| {
                row.non_empty(name)
                    .and_then(parse_flag)
                    .ok_or_else(|| format!("{name} must be 0 or 1"))
            };
            let char_length = match row.non_empty("char_length") {
                Some(raw) => Some(
                    parse_integer(raw)
                        .filter(|v| *v >= 0)
                        .ok_or_else(|| format!("char_length {raw:?} is not a non-negative integer"))?
                        as usize,
                ),
                None => None,
            };
            Ok(PairedFlags { id: id.to_string(), w: flag("w_flag")?, c: flag("c_flag")?, char_length })
        })();
        match parsed {
            Ok(p) => {
                if !seen.insert(p.id.clone()) {
                    return Err(Error::DuplicateId(p.id));
                }
                pairs.push(p);
            }
            Err(reason) => {
                warn!("skipping calibration line {}: {}", row.line, reason);
                skipped.push(SkippedRow { line: row.line, reason });
            }
        }
    }
    Ok((pairs, skipped))
}
