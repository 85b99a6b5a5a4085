//! Overreporting flags and stratified raw rates.
//!
//! An activity is overreported when its reported marker is strictly greater
//! than the classifier's marker, after mapping a predicted 99 to 0. Records
//! reported as 0 can never satisfy this and are kept out of every
//! denominator.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::classifier::PredictionSet;
use crate::error::{Error, Result};
use crate::ingest::ActivityRecord;
use crate::marker::RioMarker;

/// Strata smaller than this are marked `low_n`.
pub const LOW_N_THRESHOLD: usize = 500;

/// True iff `reported` exceeds the effective predicted marker.
///
/// `reported` must be 1 or 2; a 0 should have been removed upstream.
pub fn flag(reported: RioMarker, predicted: RioMarker) -> Result<bool> {
    match reported {
        RioMarker::NotTargeted => Err(Error::UnfilteredRecord),
        RioMarker::Insufficient => Err(Error::InvalidArgument("99 is not a reportable marker".into())),
        _ => Ok(reported.level() > predicted.level()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverreportFlag {
    pub id: String,
    pub reported: RioMarker,
    /// Marker as produced by the classifier (may be 99).
    pub predicted: RioMarker,
    pub predicted_effective: RioMarker,
    pub overreported: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlagOutcome {
    pub flags: Vec<OverreportFlag>,
    /// Input records reported as 0, excluded before flagging.
    pub excluded_zero_marker: usize,
    /// Diagnostic only: effective prediction above the reported marker.
    pub underreported: usize,
}

/// Flags every record reported as 1 or 2.
pub fn flag_records(records: &[ActivityRecord], predictions: &PredictionSet) -> Result<FlagOutcome> {
    let in_scope: Vec<&ActivityRecord> =
        records.iter().filter(|r| r.reported_marker != RioMarker::NotTargeted).collect();
    predictions.require(in_scope.iter().map(|r| r.id.as_str()))?;
    let mut outcome = FlagOutcome { excluded_zero_marker: records.len() - in_scope.len(), ..Default::default() };
    for r in in_scope {
        let predicted = predictions.get(&r.id).expect("checked by require");
        let overreported = flag(r.reported_marker, predicted)?;
        if predicted.level() > r.reported_marker.level() {
            outcome.underreported += 1;
        }
        outcome.flags.push(OverreportFlag {
            id: r.id.clone(),
            reported: r.reported_marker,
            predicted,
            predicted_effective: predicted.effective(),
            overreported,
        });
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    #[default]
    None,
    Year,
    DonorYear,
}

/// Overreporting rate within one stratum. `None` keys mean "all".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub donor: Option<String>,
    pub year: Option<i32>,
    pub n: usize,
    pub n_overreported: usize,
    pub rate: f64,
    pub low_n: bool,
}

impl RateSummary {
    fn from_counts(donor: Option<String>, year: Option<i32>, n: usize, n_overreported: usize) -> Self {
        Self {
            donor,
            year,
            n,
            n_overreported,
            rate: n_overreported as f64 / n as f64,
            low_n: n < LOW_N_THRESHOLD,
        }
    }

    pub fn is_overall(&self) -> bool {
        self.donor.is_none() && self.year.is_none()
    }
}

/// Overall rate first, then one summary per non-empty stratum in key order.
///
/// Flags whose id has no record are ignored for the stratified rows but
/// still count towards the overall row.
pub fn stratified_rates(flags: &[OverreportFlag], records: &[ActivityRecord], group_by: GroupBy) -> Vec<RateSummary> {
    let mut out = Vec::new();
    if flags.is_empty() {
        return out;
    }
    let overreported = flags.iter().filter(|f| f.overreported).count();
    out.push(RateSummary::from_counts(None, None, flags.len(), overreported));
    if group_by == GroupBy::None {
        return out;
    }
    let by_id: HashMap<&str, &ActivityRecord> = records.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut counts: BTreeMap<(Option<String>, i32), (usize, usize)> = BTreeMap::new();
    for f in flags {
        let Some(r) = by_id.get(f.id.as_str()) else { continue };
        let donor = (group_by == GroupBy::DonorYear).then(|| r.donor.clone());
        let entry = counts.entry((donor, r.year)).or_default();
        entry.0 += 1;
        entry.1 += usize::from(f.overreported);
    }
    out.extend(
        counts
            .into_iter()
            .map(|((donor, year), (n, k))| RateSummary::from_counts(donor, Some(year), n, k)),
    );
    out
}

/// Writes `id,reported,predicted,overreported`.
pub fn write_flags_csv<W: Write>(flags: &[OverreportFlag], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["id", "reported", "predicted", "overreported"])?;
    for f in flags {
        w.write_record([
            f.id.as_str(),
            &f.reported.to_string(),
            &f.predicted.to_string(),
            if f.overreported { "1" } else { "0" },
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `donor,year,n,n_overreported,rate,low_n`; the overall row has
/// empty donor and year.
pub fn write_rates_csv<W: Write>(rates: &[RateSummary], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["donor", "year", "n", "n_overreported", "rate", "low_n"])?;
    for r in rates {
        w.write_record([
            r.donor.clone().unwrap_or_default(),
            r.year.map(|y| y.to_string()).unwrap_or_default(),
            r.n.to_string(),
            r.n_overreported.to_string(),
            r.rate.to_string(),
            r.low_n.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::PredictionSource;
    use proptest::prelude::*;
    use RioMarker::*;

    fn rec(id: &str, donor: &str, year: i32, marker: RioMarker) -> ActivityRecord {
        ActivityRecord {
            id: id.into(),
            donor: donor.into(),
            recipient: None,
            year,
            title: String::new(),
            short_description: String::new(),
            long_description: String::new(),
            reported_marker: marker,
            language_tag: None,
        }
    }

    fn preds(pairs: &[(&str, RioMarker)]) -> PredictionSet {
        PredictionSet {
            source: PredictionSource::External,
            predictions: pairs.iter().map(|(id, m)| (id.to_string(), *m)).collect(),
        }
    }

    #[test]
    fn truth_table() {
        let cases = [
            (Significant, NotTargeted, true),
            (Principal, NotTargeted, true),
            (Principal, Significant, true),
            (Significant, Significant, false),
            (Principal, Principal, false),
            (Significant, Principal, false),
            (Significant, Insufficient, true),
            (Principal, Insufficient, true),
        ];
        for (r, p, want) in cases {
            assert_eq!(flag(r, p).unwrap(), want, "({r}, {p})");
        }
        assert!(matches!(flag(NotTargeted, NotTargeted), Err(Error::UnfilteredRecord)));
        assert!(flag(Insufficient, NotTargeted).is_err());
    }

    #[test]
    fn flag_records_excludes_zero_and_counts_under() {
        let records = vec![rec("a", "Japan", 2012, NotTargeted), rec("b", "Japan", 2012, Significant), rec("c", "Japan", 2012, Significant)];
        let out = flag_records(&records, &preds(&[("b", Insufficient), ("c", Principal)])).unwrap();
        assert_eq!(out.excluded_zero_marker, 1);
        assert_eq!(out.flags.len(), 2);
        assert!(out.flags[0].overreported);
        assert_eq!(out.flags[0].predicted_effective, NotTargeted);
        assert_eq!(out.underreported, 1);
    }

    #[test]
    fn missing_predictions_are_listed() {
        let records = vec![rec("a", "Japan", 2012, Significant), rec("b", "Japan", 2012, Principal)];
        match flag_records(&records, &preds(&[("a", Principal)])) {
            Err(Error::MissingPredictions(ids)) => assert_eq!(ids, ["b"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn all_flagged_single_stratum() {
        let records: Vec<_> = (0..4).map(|i| rec(&format!("r{i}"), "Japan", 2012, Principal)).collect();
        let p = preds(&records.iter().map(|r| (r.id.as_str(), NotTargeted)).collect::<Vec<_>>());
        let out = flag_records(&records, &p).unwrap();
        let rates = stratified_rates(&out.flags, &records, GroupBy::None);
        assert_eq!(rates.len(), 1);
        assert_eq!((rates[0].n, rates[0].rate), (4, 1.0));
        assert!(rates[0].low_n);
    }

    #[test]
    fn france_2012_rate() {
        let records: Vec<_> = (0..114).map(|i| rec(&format!("f{i}"), "France", 2012, Significant)).collect();
        let p = preds(
            &records
                .iter()
                .enumerate()
                .map(|(i, r)| (r.id.as_str(), if i < 87 { NotTargeted } else { Significant }))
                .collect::<Vec<_>>(),
        );
        let out = flag_records(&records, &p).unwrap();
        let rates = stratified_rates(&out.flags, &records, GroupBy::DonorYear);
        let row = rates.iter().find(|r| r.donor.as_deref() == Some("France") && r.year == Some(2012)).unwrap();
        assert_eq!((row.n, row.n_overreported), (114, 87));
        assert!((row.rate * 100.0 - 76.32).abs() < 0.005);
    }

    #[test]
    fn empty_strata_are_omitted() {
        let records = vec![rec("a", "Japan", 2012, Significant), rec("b", "France", 2015, Significant)];
        let out = flag_records(&records, &preds(&[("a", NotTargeted), ("b", Significant)])).unwrap();
        let rates = stratified_rates(&out.flags, &records, GroupBy::Year);
        let years: Vec<_> = rates.iter().map(|r| r.year).collect();
        assert_eq!(years, [None, Some(2012), Some(2015)]);
        assert!(stratified_rates(&[], &records, GroupBy::Year).is_empty());
    }

    #[test]
    fn rates_csv_shape() {
        let rates = vec![RateSummary::from_counts(None, None, 4, 1), RateSummary::from_counts(Some("Japan".into()), Some(2012), 4, 1)];
        let mut buf = Vec::new();
        write_rates_csv(&rates, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "donor,year,n,n_overreported,rate,low_n\n,,4,1,0.25,true\nJapan,2012,4,1,0.25,true\n");
    }

    fn arb_data() -> impl Strategy<Value = Vec<(String, i32, RioMarker, RioMarker)>> {
        prop::collection::vec(
            (
                prop::sample::select(vec!["France".to_string(), "Japan".into(), "Germany".into()]),
                2010i32..2014,
                prop::sample::select(vec![Significant, Principal]),
                prop::sample::select(RioMarker::ALL.to_vec()),
            ),
            1..80,
        )
    }

    fn build(data: &[(String, i32, RioMarker, RioMarker)]) -> (Vec<ActivityRecord>, PredictionSet) {
        let records: Vec<_> = data.iter().enumerate().map(|(i, (d, y, m, _))| rec(&format!("r{i}"), d, *y, *m)).collect();
        let p = PredictionSet {
            source: PredictionSource::Builtin,
            predictions: data.iter().enumerate().map(|(i, t)| (format!("r{i}"), t.3)).collect(),
        };
        (records, p)
    }

    proptest! {
        #[test]
        fn strata_partition_overall(data in arb_data()) {
            let (records, p) = build(&data);
            let flags = flag_records(&records, &p).unwrap().flags;
            let rates = stratified_rates(&flags, &records, GroupBy::DonorYear);
            let total: usize = rates.iter().skip(1).map(|r| r.n).sum();
            prop_assert_eq!(total, rates[0].n);
        }

        #[test]
        fn rates_permutation_invariant(data in arb_data(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let (records, p) = build(&data);
            let mut shuffled = records.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = stratified_rates(&flag_records(&records, &p).unwrap().flags, &records, GroupBy::DonorYear);
            let b = stratified_rates(&flag_records(&shuffled, &p).unwrap().flags, &shuffled, GroupBy::DonorYear);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn limiting_predictors(data in arb_data()) {
            let (records, _) = build(&data);
            let echo = PredictionSet {
                source: PredictionSource::Builtin,
                predictions: records.iter().map(|r| (r.id.clone(), r.reported_marker)).collect(),
            };
            let zero = PredictionSet {
                source: PredictionSource::Builtin,
                predictions: records.iter().map(|r| (r.id.clone(), NotTargeted)).collect(),
            };
            for r in stratified_rates(&flag_records(&records, &echo).unwrap().flags, &records, GroupBy::DonorYear) {
                prop_assert_eq!(r.rate, 0.0);
            }
            for r in stratified_rates(&flag_records(&records, &zero).unwrap().flags, &records, GroupBy::DonorYear) {
                prop_assert_eq!(r.rate, 1.0);
            }
        }
    }
}
