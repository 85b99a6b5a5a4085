//! Parsing, validation and filtering of CRS-style activity records and the
//! gold-label files that accompany them.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{Read, Write};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marker::RioMarker;
use crate::table::{parse_integer, read_rows, InputFormat, RawRow, SkippedRow};
use crate::text::{record_length, LengthSource};

pub const RECORD_COLUMNS: [&str; 8] = [
    "id",
    "donor",
    "recipient",
    "year",
    "title",
    "short_description",
    "long_description",
    "reported_marker",
];

pub const MIN_YEAR: i32 = 2000;
pub const MAX_YEAR: i32 = 2100;

/// The five largest DAC donors used as the default extrapolation frame.
pub const TOP_FIVE_DONORS: [&str; 5] = ["France", "Germany", "Japan", "United Kingdom", "United States"];

/// One aid activity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityRecord {
    pub id: String,
    pub donor: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipient: Option<String>,
    pub year: i32,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub short_description: String,
    #[serde(default)]
    pub long_description: String,
    pub reported_marker: RioMarker,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language_tag: Option<String>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Abort on the first malformed row instead of skipping it.
    pub strict: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ParseOutcome {
    pub records: Vec<ActivityRecord>,
    pub skipped: Vec<SkippedRow>,
}

const DONOR_ALIASES: &[(&str, &str)] = &[
    ("uk", "United Kingdom"),
    ("u.k.", "United Kingdom"),
    ("united kingdom", "United Kingdom"),
    ("great britain", "United Kingdom"),
    ("gb", "United Kingdom"),
    ("us", "United States"),
    ("u.s.", "United States"),
    ("usa", "United States"),
    ("u.s.a.", "United States"),
    ("united states", "United States"),
    ("united states of america", "United States"),
    ("france", "France"),
    ("germany", "Germany"),
    ("japan", "Japan"),
];

/// Canonical spelling of a donor name. Known variants map to one key; other
/// names are returned trimmed.
pub fn canonical_donor(name: &str) -> String {
    let trimmed = name.trim();
    let folded = trimmed.to_lowercase();
    DONOR_ALIASES
        .iter()
        .find(|(alias, _)| *alias == folded)
        .map(|(_, canon)| canon.to_string())
        .unwrap_or_else(|| trimmed.to_string())
}

fn donor_key(name: &str) -> String {
    canonical_donor(name).to_lowercase()
}

/// Parses activity records from CSV or JSON-Lines.
///
/// Malformed rows are skipped and logged with their line number unless
/// `opts.strict` is set. A malformed header or a repeated id is always fatal.
pub fn parse_records<R: Read>(source: R, format: InputFormat, opts: ParseOptions) -> Result<ParseOutcome> {
    let rows = read_rows(source, format, &RECORD_COLUMNS)?;
    let mut outcome = ParseOutcome::default();
    let mut seen = HashSet::new();
    for row in rows {
        match record_from_row(&row) {
            Ok(record) => {
                if !seen.insert(record.id.clone()) {
                    return Err(Error::DuplicateId(record.id));
                }
                outcome.records.push(record);
            }
            Err(reason) => {
                if opts.strict {
                    return Err(Error::Row { line: row.line, reason });
                }
                warn!("skipping line {}: {}", row.line, reason);
                outcome.skipped.push(SkippedRow { line: row.line, reason });
            }
        }
    }
    Ok(outcome)
}

fn record_from_row(row: &RawRow) -> std::result::Result<ActivityRecord, String> {
    if let Some(reason) = &row.broken {
        return Err(reason.clone());
    }
    let id = row.non_empty("id").ok_or("missing id")?.to_string();
    let donor = row.non_empty("donor").ok_or("missing donor")?;
    let year_raw = row.non_empty("year").ok_or("missing year")?;
    let year = parse_integer(year_raw).ok_or_else(|| format!("year {year_raw:?} is not an integer"))?;
    if !(i64::from(MIN_YEAR)..=i64::from(MAX_YEAR)).contains(&year) {
        return Err(format!("year {year} out of range"));
    }
    let marker_raw = row.non_empty("reported_marker").ok_or("missing reported_marker")?;
    let marker_code =
        parse_integer(marker_raw).ok_or_else(|| format!("marker {marker_raw:?} is not an integer"))?;
    let reported_marker = RioMarker::from_code(marker_code)
        .filter(|m| m.is_reportable())
        .ok_or("marker out of range")?;
    let text = |name: &str| row.get(name).map(|v| v.trim().to_string()).unwrap_or_default();
    Ok(ActivityRecord {
        id,
        donor: canonical_donor(donor),
        recipient: row.non_empty("recipient").map(str::to_string),
        year: year as i32,
        title: text("title"),
        short_description: text("short_description"),
        long_description: text("long_description"),
        reported_marker,
        language_tag: row.non_empty("language_tag").map(str::to_string),
    })
}

/// Writes records as CSV with the full column set (including `language_tag`).
pub fn write_records_csv<W: Write>(records: &[ActivityRecord], sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    let mut header = RECORD_COLUMNS.to_vec();
    header.push("language_tag");
    writer.write_record(&header)?;
    for r in records {
        let year = r.year.to_string();
        let marker = r.reported_marker.to_string();
        writer.write_record([
            r.id.as_str(),
            r.donor.as_str(),
            r.recipient.as_deref().unwrap_or(""),
            year.as_str(),
            r.title.as_str(),
            r.short_description.as_str(),
            r.long_description.as_str(),
            marker.as_str(),
            r.language_tag.as_deref().unwrap_or(""),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes records as JSON-Lines.
pub fn write_records_jsonl<W: Write>(records: &[ActivityRecord], mut sink: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut sink, r)?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

/// Selection criteria for the analysis frame. Unset criteria accept everything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFilter {
    pub min_reported_marker: u8,
    pub donors: Option<BTreeSet<String>>,
    pub year_range: Option<(i32, i32)>,
    pub min_text_length: Option<usize>,
    pub length_source: LengthSource,
}

impl Default for DatasetFilter {
    fn default() -> Self {
        Self {
            min_reported_marker: 1,
            donors: None,
            year_range: None,
            min_text_length: None,
            length_source: LengthSource::default(),
        }
    }
}

impl DatasetFilter {
    /// A filter that accepts every valid record.
    pub fn pass_all() -> Self {
        Self { min_reported_marker: 0, ..Self::default() }
    }

    pub fn with_donors<I, S>(mut self, donors: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.donors = Some(donors.into_iter().map(|d| canonical_donor(d.as_ref())).collect());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_reported_marker > 2 {
            return Err(Error::InvalidArgument(format!(
                "min_reported_marker {} outside 0..=2",
                self.min_reported_marker
            )));
        }
        if let Some((lo, hi)) = self.year_range {
            if lo > hi {
                return Err(Error::InvalidArgument(format!("year range {lo}..{hi} is empty")));
            }
        }
        Ok(())
    }

    pub fn accepts(&self, record: &ActivityRecord) -> bool {
        if record.reported_marker.level() < self.min_reported_marker {
            return false;
        }
        if let Some(donors) = &self.donors {
            let key = donor_key(&record.donor);
            if !donors.iter().any(|d| donor_key(d) == key) {
                return false;
            }
        }
        if let Some((lo, hi)) = self.year_range {
            if record.year < lo || record.year > hi {
                return false;
            }
        }
        if let Some(min_len) = self.min_text_length {
            if record_length(record, self.length_source) < min_len {
                return false;
            }
        }
        true
    }
}

/// Returns the records accepted by `filter`, in input order.
pub fn apply_filter(records: &[ActivityRecord], filter: &DatasetFilter) -> Vec<ActivityRecord> {
    records.iter().filter(|r| filter.accepts(r)).cloned().collect()
}

/// A re-evaluated marker for one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldLabel {
    pub id: String,
    pub gold_marker: RioMarker,
}

#[derive(Debug, Clone, Default)]
pub struct GoldOutcome {
    pub labels: Vec<GoldLabel>,
    pub skipped: Vec<SkippedRow>,
}

/// Parses a gold label file (`id,gold_marker`, markers in {0,1,2,99}).
pub fn parse_gold_labels<R: Read>(source: R, format: InputFormat, opts: ParseOptions) -> Result<GoldOutcome> {
    let rows = read_rows(source, format, &["id", "gold_marker"])?;
    let mut outcome = GoldOutcome::default();
    for row in rows {
        let parsed = (|| {
            if let Some(reason) = &row.broken {
                return Err(reason.clone());
            }
            let id = row.non_empty("id").ok_or("missing id")?.to_string();
            let raw = row.non_empty("gold_marker").ok_or("missing gold_marker")?;
            let code = parse_integer(raw).ok_or_else(|| format!("marker {raw:?} is not an integer"))?;
            let gold_marker = RioMarker::from_code(code).ok_or("marker out of range")?;
            Ok(GoldLabel { id, gold_marker })
        })();
        match parsed {
            Ok(label) => outcome.labels.push(label),
            Err(reason) => {
                if opts.strict {
                    return Err(Error::Row { line: row.line, reason });
                }
                warn!("skipping gold label line {}: {}", row.line, reason);
                outcome.skipped.push(SkippedRow { line: row.line, reason });
            }
        }
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Default)]
pub struct JoinOutcome {
    pub pairs: Vec<(ActivityRecord, RioMarker)>,
    /// Label ids without a matching record.
    pub unmatched_labels: Vec<String>,
    /// Number of records without a label.
    pub unmatched_records: usize,
}

/// Inner join of records and gold labels on id, in record order.
pub fn join_gold(records: &[ActivityRecord], labels: &[GoldLabel]) -> Result<JoinOutcome> {
    let mut by_id: HashMap<&str, RioMarker> = HashMap::with_capacity(labels.len());
    for label in labels {
        if by_id.insert(label.id.as_str(), label.gold_marker).is_some() {
            return Err(Error::DuplicateId(label.id.clone()));
        }
    }
    let mut outcome = JoinOutcome::default();
    let mut matched = HashSet::new();
    for record in records {
        match by_id.get(record.id.as_str()) {
            Some(&gold) => {
                matched.insert(record.id.as_str());
                outcome.pairs.push((record.clone(), gold));
            }
            None => outcome.unmatched_records += 1,
        }
    }
    outcome.unmatched_labels = labels
        .iter()
        .filter(|l| !matched.contains(l.id.as_str()))
        .map(|l| l.id.clone())
        .collect();
    if !outcome.unmatched_labels.is_empty() {
        warn!("{} gold label(s) matched no record", outcome.unmatched_labels.len());
    }
    if outcome.pairs.is_empty() {
        warn!("gold labels and records share no ids");
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "id,donor,recipient,year,title,short_description,long_description,reported_marker\n";

    fn csv(rows: &str) -> ParseOutcome {
        parse_records(format!("{HEADER}{rows}").as_bytes(), InputFormat::Csv, ParseOptions::default()).unwrap()
    }

    pub(crate) fn record(id: &str, donor: &str, year: i32, marker: u8) -> ActivityRecord {
        ActivityRecord {
            id: id.into(),
            donor: donor.into(),
            recipient: None,
            year,
            title: format!("title {id}"),
            short_description: String::new(),
            long_description: "some long description".into(),
            reported_marker: RioMarker::from_code(marker.into()).unwrap(),
            language_tag: None,
        }
    }

    #[test]
    fn single_valid_row() {
        let out = csv("a1,Japan,Viet Nam,2012,Dams,short,long text,2\n");
        assert_eq!(out.records.len(), 1);
        assert!(out.skipped.is_empty());
        let r = &out.records[0];
        assert_eq!((r.id.as_str(), r.donor.as_str(), r.year), ("a1", "Japan", 2012));
        assert_eq!(r.reported_marker, RioMarker::Principal);
        assert_eq!(r.recipient.as_deref(), Some("Viet Nam"));
    }

    #[test]
    fn marker_out_of_range_is_skipped() {
        let out = csv("a1,Japan,,2012,t,s,l,3\n");
        assert!(out.records.is_empty());
        assert_eq!(out.skipped.len(), 1);
        assert_eq!(out.skipped[0].reason, "marker out of range");
        assert_eq!(out.skipped[0].line, 2);
        // 99 is never a reported value
        assert_eq!(csv("a1,Japan,,2012,t,s,l,99\n").skipped[0].reason, "marker out of range");
    }

    #[test]
    fn jsonl_row_without_id_is_skipped() {
        let src = r#"{"id":"r1","donor":"France","year":2011,"reported_marker":1}
{"id":"r2","donor":"France","year":2011,"reported_marker":2,"title":"x"}
{"donor":"France","year":2011,"reported_marker":1}
{"id":"r4","donor":"France","year":"2012","reported_marker":"1"}
{"id":"r5","donor":"France","year":2013,"reported_marker":2,"language_tag":"fr"}
"#;
        let out = parse_records(src.as_bytes(), InputFormat::JsonLines, ParseOptions::default()).unwrap();
        assert_eq!(out.records.len(), 4);
        assert_eq!(out.skipped, vec![SkippedRow { line: 3, reason: "missing id".into() }]);
        assert_eq!(out.records[3].language_tag.as_deref(), Some("fr"));
    }

    #[test]
    fn malformed_header_is_fatal() {
        let err = parse_records("id,donor\na,b\n".as_bytes(), InputFormat::Csv, ParseOptions::default());
        assert!(matches!(err, Err(Error::Header(_))));
        let err = parse_records("".as_bytes(), InputFormat::Csv, ParseOptions::default());
        assert!(matches!(err, Err(Error::Header(_))));
    }

    #[test]
    fn duplicate_id_is_fatal() {
        let src = format!("{HEADER}a,Japan,,2012,t,s,l,1\na,Japan,,2013,t,s,l,2\n");
        let err = parse_records(src.as_bytes(), InputFormat::Csv, ParseOptions::default());
        assert!(matches!(err, Err(Error::DuplicateId(id)) if id == "a"));
    }

    #[test]
    fn strict_mode_aborts() {
        let src = format!("{HEADER}a,Japan,,1990,t,s,l,1\n");
        let err = parse_records(src.as_bytes(), InputFormat::Csv, ParseOptions { strict: true });
        assert!(matches!(err, Err(Error::Row { line: 2, .. })));
    }

    #[test]
    fn wrong_field_count_is_skipped_with_line() {
        let out = csv("a,Japan,,2012,t,s,l,1\nb,Japan,2012\nc,Japan,,2012,t,s,l,1\n");
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.skipped[0].line, 3);
    }

    #[test]
    fn quoted_fields_and_missing_long_description() {
        let out = csv("a,\"U.K.\",,2015,\"Roads, bridges\",\"short, quoted \"\"x\"\"\",,1\n");
        let r = &out.records[0];
        assert_eq!(r.donor, "United Kingdom");
        assert_eq!(r.title, "Roads, bridges");
        assert_eq!(r.short_description, "short, quoted \"x\"");
        assert_eq!(r.long_description, "");
    }

    #[test]
    fn donor_canonicalization() {
        assert_eq!(canonical_donor(" uk "), "United Kingdom");
        assert_eq!(canonical_donor("USA"), "United States");
        assert_eq!(canonical_donor("Norway"), "Norway");
    }

    #[test]
    fn filter_by_marker() {
        let rs = vec![record("a", "Japan", 2012, 0), record("b", "Japan", 2012, 1), record("c", "Japan", 2012, 2)];
        let out = apply_filter(&rs, &DatasetFilter::default());
        assert_eq!(out.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), ["b", "c"]);
        assert_eq!(rs.len(), 3);
    }

    #[test]
    fn filter_top_five_drops_norway() {
        let rs = vec![record("a", "Norway", 2012, 1), record("b", "UK", 2012, 1), record("c", "france", 2012, 2)];
        let f = DatasetFilter::default().with_donors(TOP_FIVE_DONORS);
        let out = apply_filter(&rs, &f);
        assert_eq!(out.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), ["b", "c"]);
    }

    #[test]
    fn pass_all_filter_is_identity() {
        let rs = vec![record("a", "Norway", 2001, 0), record("b", "UK", 2099, 2)];
        assert_eq!(apply_filter(&rs, &DatasetFilter::pass_all()), rs);
    }

    #[test]
    fn filter_validation() {
        assert!(DatasetFilter { min_reported_marker: 3, ..Default::default() }.validate().is_err());
        assert!(DatasetFilter { year_range: Some((2015, 2010)), ..Default::default() }.validate().is_err());
        assert!(DatasetFilter::default().validate().is_ok());
    }

    #[test]
    fn join_counts_unmatched() {
        let rs = vec![record("a", "Japan", 2012, 1), record("b", "Japan", 2012, 1), record("c", "Japan", 2012, 1)];
        let labels = vec![
            GoldLabel { id: "a".into(), gold_marker: RioMarker::Insufficient },
            GoldLabel { id: "c".into(), gold_marker: RioMarker::Principal },
        ];
        let out = join_gold(&rs, &labels).unwrap();
        assert_eq!(out.pairs.len(), 2);
        assert_eq!(out.unmatched_records, 1);
        assert!(out.unmatched_labels.is_empty());
    }

    #[test]
    fn join_disjoint_is_empty() {
        let rs = vec![record("a", "Japan", 2012, 1)];
        let labels = vec![GoldLabel { id: "z".into(), gold_marker: RioMarker::Principal }];
        let out = join_gold(&rs, &labels).unwrap();
        assert!(out.pairs.is_empty());
        assert_eq!(out.unmatched_labels, vec!["z".to_string()]);
    }

    #[test]
    fn join_duplicate_label_is_fatal() {
        let rs = vec![record("a", "Japan", 2012, 1)];
        let labels = vec![
            GoldLabel { id: "a".into(), gold_marker: RioMarker::Principal },
            GoldLabel { id: "a".into(), gold_marker: RioMarker::NotTargeted },
        ];
        assert!(matches!(join_gold(&rs, &labels), Err(Error::DuplicateId(_))));
    }

    #[test]
    fn gold_labels_accept_99() {
        let out = parse_gold_labels("id,gold_marker\na,99\nb,4\n".as_bytes(), InputFormat::Csv, ParseOptions::default())
            .unwrap();
        assert_eq!(out.labels.len(), 1);
        assert_eq!(out.labels[0].gold_marker, RioMarker::Insufficient);
        assert_eq!(out.skipped.len(), 1);
    }

    fn arb_text() -> impl Strategy<Value = String> {
        // leading/trailing whitespace is trimmed on input, so generate trimmed text
        "[a-zA-Zéè ,\"0-9\n]{0,40}".prop_map(|s| s.trim().to_string())
    }

    fn arb_record() -> impl Strategy<Value = ActivityRecord> {
        (
            "[a-z0-9]{1,8}",
            prop::sample::select(vec!["France", "Germany", "Japan", "United Kingdom", "Norway"]),
            prop::option::of("[A-Z][a-z]{2,8}"),
            MIN_YEAR..=MAX_YEAR,
            arb_text(),
            arb_text(),
            arb_text(),
            0u8..=2,
            prop::option::of(prop::sample::select(vec!["en", "fr"])),
        )
            .prop_map(|(id, donor, recipient, year, title, short, long, marker, tag)| ActivityRecord {
                id,
                donor: donor.into(),
                recipient,
                year,
                title,
                short_description: short,
                long_description: long,
                reported_marker: RioMarker::from_code(marker.into()).unwrap(),
                language_tag: tag.map(str::to_string),
            })
    }

    fn unique_ids(mut rs: Vec<ActivityRecord>) -> Vec<ActivityRecord> {
        for (i, r) in rs.iter_mut().enumerate() {
            r.id = format!("{}-{i}", r.id);
        }
        rs
    }

    proptest! {
        #[test]
        fn csv_round_trip(rs in prop::collection::vec(arb_record(), 0..20).prop_map(unique_ids)) {
            let mut buf = Vec::new();
            write_records_csv(&rs, &mut buf).unwrap();
            let back = parse_records(buf.as_slice(), InputFormat::Csv, ParseOptions { strict: true }).unwrap();
            prop_assert_eq!(back.records, rs);
        }

        #[test]
        fn jsonl_round_trip(rs in prop::collection::vec(arb_record(), 0..20).prop_map(unique_ids)) {
            let mut buf = Vec::new();
            write_records_jsonl(&rs, &mut buf).unwrap();
            let back = parse_records(buf.as_slice(), InputFormat::JsonLines, ParseOptions { strict: true }).unwrap();
            prop_assert_eq!(back.records, rs);
        }

        #[test]
        fn filter_idempotent_and_sound(
            rs in prop::collection::vec(arb_record(), 0..30),
            min_marker in 0u8..=2,
            years in prop::option::of((2000i32..2100, 0i32..40)),
            min_len in prop::option::of(0usize..30),
            donors in prop::option::of(prop::sample::subsequence(vec!["France", "Japan", "UK"], 0..3)),
        ) {
            let mut f = DatasetFilter {
                min_reported_marker: min_marker,
                year_range: years.map(|(lo, span)| (lo, lo + span)),
                min_text_length: min_len,
                ..Default::default()
            };
            if let Some(d) = donors {
                f = f.with_donors(d);
            }
            let once = apply_filter(&rs, &f);
            let twice = apply_filter(&once, &f);
            prop_assert_eq!(&once, &twice);
            prop_assert!(once.len() <= rs.len());
            prop_assert!(once.iter().all(|r| f.accepts(r)));
        }
    }
}
