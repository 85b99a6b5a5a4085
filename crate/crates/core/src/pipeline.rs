//! One estimation pass: flag, aggregate, correct.

use serde::{Deserialize, Serialize};

use crate::bayes::{correction_factor, corrected_rate, CorrectedEstimate, CorrectionFactor, PairedFlags, DEFAULT_SAMPLES};
use crate::classifier::PredictionSet;
use crate::error::{Error, Result};
use crate::estimator::{flag, flag_records, stratified_rates, FlagOutcome, GroupBy, RateSummary};
use crate::ingest::{join_gold, ActivityRecord, GoldLabel};
use crate::marker::RioMarker;
use crate::text::{record_length, LengthSource};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub length_source: LengthSource,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self { n_samples: DEFAULT_SAMPLES, seed: 0, length_source: LengthSource::default() }
    }
}

/// Everything an estimation pass reads.
#[derive(Debug, Clone, Copy)]
pub struct EstimateInputs<'a> {
    /// The analysis frame, already filtered.
    pub records: &'a [ActivityRecord],
    pub predictions: &'a PredictionSet,
    pub calibration: &'a [PairedFlags],
}

/// A raw stratum rate next to its corrected estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectedRow {
    pub rate: RateSummary,
    pub corrected: CorrectedEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRun {
    pub flags: FlagOutcome,
    pub overall: CorrectedRow,
    pub by_year: Vec<CorrectedRow>,
    pub by_donor_year: Vec<CorrectedRow>,
    pub factor: CorrectionFactor,
}

fn correct_all(rates: Vec<RateSummary>, factor: &CorrectionFactor) -> Result<Vec<CorrectedRow>> {
    rates
        .into_iter()
        .filter(|r| !r.is_overall())
        .map(|rate| Ok(CorrectedRow { corrected: corrected_rate(rate.rate, factor)?, rate }))
        .collect()
}

pub fn run_estimate(inputs: EstimateInputs<'_>, config: &EstimateConfig) -> Result<EstimateRun> {
    let flags = flag_records(inputs.records, inputs.predictions)?;
    if flags.flags.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let factor = correction_factor(inputs.calibration, config.n_samples, config.seed)?;
    let overall_rate = stratified_rates(&flags.flags, inputs.records, GroupBy::None).remove(0);
    let overall = CorrectedRow { corrected: corrected_rate(overall_rate.rate, &factor)?, rate: overall_rate };
    let by_year = correct_all(stratified_rates(&flags.flags, inputs.records, GroupBy::Year), &factor)?;
    let by_donor_year = correct_all(stratified_rates(&flags.flags, inputs.records, GroupBy::DonorYear), &factor)?;
    Ok(EstimateRun { flags, overall, by_year, by_donor_year, factor })
}

/// Builds calibration flags by comparing each record's reported marker
/// with both the classifier prediction (W) and the gold marker (C).
///
/// Records reported as 0 are skipped; a missing prediction is fatal.
pub fn calibration_from_gold(
    records: &[ActivityRecord],
    gold: &[GoldLabel],
    predictions: &PredictionSet,
    length_source: LengthSource,
) -> Result<Vec<PairedFlags>> {
    let joined = join_gold(records, gold)?;
    let in_scope: Vec<&(ActivityRecord, RioMarker)> =
        joined.pairs.iter().filter(|(r, _)| r.reported_marker != RioMarker::NotTargeted).collect();
    predictions.require(in_scope.iter().map(|(r, _)| r.id.as_str()))?;
    in_scope
        .into_iter()
        .map(|(r, gold)| {
            let predicted = predictions.get(&r.id).expect("checked by require");
            Ok(PairedFlags {
                id: r.id.clone(),
                w: flag(r.reported_marker, predicted)?,
                c: flag(r.reported_marker, *gold)?,
                char_length: Some(record_length(r, length_source)),
            })
        })
        .collect()
}
