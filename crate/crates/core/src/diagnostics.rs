//! Input-length diagnostics: the IQR lower fence, agreement by length, and
//! re-estimation without short descriptions.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bayes::PairedFlags;
use crate::classifier::PredictionSet;
use crate::error::{Error, Result};
use crate::ingest::ActivityRecord;
use crate::pipeline::{run_estimate, EstimateConfig, EstimateInputs, EstimateRun};
use crate::stats::{median, quantiles};
use crate::text::{assemble_text_with, log_length, normalize_whitespace, record_length, LengthSource, TextOptions};

/// Median and count of lengths in one group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupLength {
    pub median: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthReport {
    pub length_source: LengthSource,
    pub n: usize,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub iqr: f64,
    /// `max(0, q1 - 1.5 * iqr)`.
    pub cutoff: f64,
    pub log_cutoff: f64,
    pub per_donor: BTreeMap<String, GroupLength>,
    pub per_year: BTreeMap<i32, GroupLength>,
}

/// Quartiles (type 7) and the IQR lower fence of a set of lengths.
pub fn iqr_cutoff(lengths: &[usize]) -> Result<LengthReport> {
    let values: Vec<f64> = lengths.iter().map(|&l| l as f64).collect();
    let q = quantiles(&values, &[0.25, 0.5, 0.75])?;
    let iqr = q[2] - q[0];
    let cutoff = (q[0] - 1.5 * iqr).max(0.0);
    Ok(LengthReport {
        length_source: LengthSource::default(),
        n: lengths.len(),
        q1: q[0],
        median: q[1],
        q3: q[2],
        iqr,
        cutoff,
        log_cutoff: if cutoff > 0.0 { cutoff.ln() } else { 0.0 },
        per_donor: BTreeMap::new(),
        per_year: BTreeMap::new(),
    })
}

/// Length report over records, with per-donor and per-year medians.
pub fn length_report(records: &[ActivityRecord], source: LengthSource) -> Result<LengthReport> {
    let lengths: Vec<usize> = records.iter().map(|r| record_length(r, source)).collect();
    let mut report = iqr_cutoff(&lengths)?;
    report.length_source = source;
    let mut donors: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut years: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for (r, &len) in records.iter().zip(&lengths) {
        donors.entry(r.donor.clone()).or_default().push(len as f64);
        years.entry(r.year).or_default().push(len as f64);
    }
    let summarize = |v: &Vec<f64>| GroupLength { median: median(v).expect("non-empty group"), n: v.len() };
    report.per_donor = donors.iter().map(|(k, v)| (k.clone(), summarize(v))).collect();
    report.per_year = years.iter().map(|(k, v)| (*k, summarize(v))).collect();
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementBin {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub n: usize,
    /// `None` for an empty bin.
    pub agreement: Option<f64>,
}

/// Share of records whose effective prediction equals the reported marker,
/// in `n_bins` equal-width bins over the observed log-length range.
pub fn agreement_by_length(
    records: &[ActivityRecord],
    predictions: &PredictionSet,
    n_bins: usize,
    source: LengthSource,
) -> Result<Vec<AgreementBin>> {
    if n_bins < 2 {
        return Err(Error::InvalidArgument(format!("n_bins must be at least 2, got {n_bins}")));
    }
    if records.is_empty() {
        return Err(Error::EmptySample);
    }
    predictions.require(records.iter().map(|r| r.id.as_str()))?;
    let points: Vec<(f64, bool)> = records
        .iter()
        .map(|r| {
            let predicted = predictions.get(&r.id).expect("checked by require");
            (log_length(record_length(r, source)), predicted.effective() == r.reported_marker)
        })
        .collect();
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![(0usize, 0usize); n_bins];
    for &(x, agrees) in &points {
        let idx = if width > 0.0 { (((x - lo) / width) as usize).min(n_bins - 1) } else { 0 };
        counts[idx].0 += 1;
        counts[idx].1 += usize::from(agrees);
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, (n, agree))| AgreementBin {
            bin_lo: lo + width * i as f64,
            bin_hi: if i + 1 == n_bins { hi } else { lo + width * (i + 1) as f64 },
            n,
            agreement: (n > 0).then(|| agree as f64 / n as f64),
        })
        .collect())
}

/// Writes `bin_lo,bin_hi,n,agreement` (empty agreement for empty bins).
pub fn write_bins_csv<W: Write>(bins: &[AgreementBin], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["bin_lo", "bin_hi", "n", "agreement"])?;
    for b in bins {
        w.write_record([
            b.bin_lo.to_string(),
            b.bin_hi.to_string(),
            b.n.to_string(),
            b.agreement.map(|a| a.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// How short descriptions are excluded.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExcludeShort {
    /// Use the IQR lower fence of the analysis frame.
    Auto,
    Fixed(usize),
    #[default]
    Off,
}

impl std::str::FromStr for ExcludeShort {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "auto" => Ok(ExcludeShort::Auto),
            "off" | "none" => Ok(ExcludeShort::Off),
            n => n
                .parse()
                .map(ExcludeShort::Fixed)
                .map_err(|_| Error::InvalidArgument(format!("--exclude-short expects auto, off or an integer, got {n:?}"))),
        }
    }
}

/// Resolves the cutoff in characters, or `None` when exclusion is off.
pub fn resolve_cutoff(mode: ExcludeShort, records: &[ActivityRecord], source: LengthSource) -> Result<Option<f64>> {
    match mode {
        ExcludeShort::Off => Ok(None),
        ExcludeShort::Fixed(n) => Ok(Some(n as f64)),
        ExcludeShort::Auto => Ok(Some(length_report(records, source)?.cutoff)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortTextRerun {
    pub cutoff: f64,
    pub length_source: LengthSource,
    pub excluded_records: usize,
    pub excluded_calibration: usize,
    /// Calibration rows kept because their length is unknown.
    pub calibration_without_length: usize,
    pub primary: EstimateRun,
    pub filtered: EstimateRun,
}

/// Runs the estimate on all inputs and again with every record and
/// calibration row shorter than `cutoff` characters removed.
pub fn rerun_excluding_short(inputs: EstimateInputs<'_>, cutoff: f64, config: &EstimateConfig) -> Result<ShortTextRerun> {
    let primary = run_estimate(inputs, config)?;
    let records: Vec<ActivityRecord> = inputs
        .records
        .iter()
        .filter(|r| record_length(r, config.length_source) as f64 >= cutoff)
        .cloned()
        .collect();
    let calibration: Vec<PairedFlags> = inputs
        .calibration
        .iter()
        .filter(|p| p.char_length.is_none_or(|len| len as f64 >= cutoff))
        .cloned()
        .collect();
    let calibration_without_length = inputs.calibration.iter().filter(|p| p.char_length.is_none()).count();
    if calibration_without_length > 0 && cutoff > 0.0 {
        log::warn!("{calibration_without_length} calibration row(s) have no length and were kept");
    }
    if records.is_empty() || calibration.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let filtered = run_estimate(
        EstimateInputs { records: &records, predictions: inputs.predictions, calibration: &calibration },
        config,
    )?;
    Ok(ShortTextRerun {
        cutoff,
        length_source: config.length_source,
        excluded_records: inputs.records.len() - records.len(),
        excluded_calibration: inputs.calibration.len() - calibration.len(),
        calibration_without_length,
        primary,
        filtered,
    })
}

/// Distinct-description share for one donor and year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniqueRatioRow {
    pub donor: String,
    pub year: i32,
    pub total: usize,
    pub unique: usize,
    pub ratio: f64,
}

pub fn unique_ratio_by_donor_year(records: &[ActivityRecord], opts: TextOptions) -> Vec<UniqueRatioRow> {
    let mut groups: BTreeMap<(String, i32), (usize, HashMap<String, ()>)> = BTreeMap::new();
    for r in records {
        let entry = groups.entry((r.donor.clone(), r.year)).or_default();
        entry.0 += 1;
        entry.1.insert(normalize_whitespace(&assemble_text_with(r, opts).text), ());
    }
    groups
        .into_iter()
        .map(|((donor, year), (total, distinct))| UniqueRatioRow {
            donor,
            year,
            total,
            unique: distinct.len(),
            ratio: distinct.len() as f64 / total as f64,
        })
        .collect()
}
