//! Classifier input assembly, language tagging, length statistics and
//! duplicate-description diagnostics.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::tokenize;
use crate::error::{Error, Result};
use crate::ingest::ActivityRecord;
use crate::marker::RioMarker;
use crate::stats;
use crate::table::{read_rows, InputFormat};

/// Which text a length is measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthSource {
    /// The assembled classifier input (title + long description).
    Assembled,
    /// The long description alone.
    #[default]
    LongDescription,
}

impl std::str::FromStr for LengthSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "assembled" => Ok(LengthSource::Assembled),
            "long_description" | "long-description" => Ok(LengthSource::LongDescription),
            other => Err(Error::InvalidArgument(format!("unknown length source {other:?}"))),
        }
    }
}

impl std::fmt::Display for LengthSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LengthSource::Assembled => "assembled",
            LengthSource::LongDescription => "long_description",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextOptions {
    /// Insert the short description between title and long description.
    pub include_short_description: bool,
}

/// Classifier input for one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedText {
    pub id: String,
    pub text: String,
    pub char_length: usize,
    pub log_length: f64,
    pub language_tag: String,
}

impl PreparedText {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let char_length = text.chars().count();
        Self {
            id: id.into(),
            text,
            char_length,
            log_length: log_length(char_length),
            language_tag: UNDETERMINED.to_string(),
        }
    }
}

pub const UNDETERMINED: &str = "und";

/// Natural log of a character count; 0 for empty text.
pub fn log_length(chars: usize) -> f64 {
    if chars == 0 {
        0.0
    } else {
        (chars as f64).ln()
    }
}

fn join_parts<'a>(parts: impl IntoIterator<Item = &'a str>) -> String {
    parts
        .into_iter()
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Title and long description joined by a single space, empty parts omitted.
pub fn assemble_text(record: &ActivityRecord) -> PreparedText {
    assemble_text_with(record, TextOptions::default())
}

pub fn assemble_text_with(record: &ActivityRecord, opts: TextOptions) -> PreparedText {
    let text = if opts.include_short_description {
        join_parts([
            record.title.as_str(),
            record.short_description.as_str(),
            record.long_description.as_str(),
        ])
    } else {
        join_parts([record.title.as_str(), record.long_description.as_str()])
    };
    let mut prepared = PreparedText::new(record.id.clone(), text);
    if let Some(tag) = &record.language_tag {
        prepared.language_tag = tag.clone();
    }
    prepared
}

/// Character length of a record under the chosen length source.
pub fn record_length(record: &ActivityRecord, source: LengthSource) -> usize {
    match source {
        LengthSource::Assembled => assemble_text(record).char_length,
        LengthSource::LongDescription => record.long_description.trim().chars().count(),
    }
}

const ENGLISH_STOPWORDS: &[&str] = &[
    "the", "of", "and", "to", "in", "for", "is", "are", "with", "on", "by", "will", "this", "that", "be", "from",
    "at", "as", "an", "or", "its", "their", "which", "was", "were", "has", "have", "it", "into", "through",
];

const FRENCH_STOPWORDS: &[&str] = &[
    "le", "la", "les", "des", "du", "de", "et", "un", "une", "pour", "dans", "au", "aux", "sur", "par", "est",
    "sont", "avec", "ce", "cette", "qui", "que", "ses", "leur", "leurs", "d", "l", "ou", "en", "plus",
];

/// Source of language tags.
#[derive(Debug, Clone, Default)]
pub enum LanguageTagger {
    /// Stopword-ratio heuristic over English and French.
    #[default]
    Heuristic,
    /// Tags looked up by record id; unknown ids get [`UNDETERMINED`].
    External(HashMap<String, String>),
}

impl LanguageTagger {
    /// Loads an external tag file (`id,language_tag`).
    pub fn from_reader<R: Read>(source: R, format: InputFormat) -> Result<Self> {
        let rows = read_rows(source, format, &["id", "language_tag"])?;
        let mut tags = HashMap::new();
        for row in rows {
            if let (Some(id), Some(tag)) = (row.non_empty("id"), row.non_empty("language_tag")) {
                if tags.insert(id.to_string(), tag.to_string()).is_some() {
                    return Err(Error::DuplicateId(id.to_string()));
                }
            }
        }
        Ok(LanguageTagger::External(tags))
    }

    pub fn tag(&self, text: &PreparedText) -> String {
        match self {
            LanguageTagger::Heuristic => heuristic_language(&text.text).to_string(),
            LanguageTagger::External(tags) => tags.get(&text.id).cloned().unwrap_or_else(|| UNDETERMINED.into()),
        }
    }
}

/// Returns "fr" when French stopwords make up a larger share of the tokens
/// than English ones, "en" otherwise, and "und" for text without tokens.
pub fn heuristic_language(text: &str) -> &'static str {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return UNDETERMINED;
    }
    let hits = |list: &[&str]| tokens.iter().filter(|t| list.contains(&t.as_str())).count();
    // Both ratios share the token count as denominator.
    if hits(FRENCH_STOPWORDS) > hits(ENGLISH_STOPWORDS) {
        "fr"
    } else {
        "en"
    }
}

pub fn tag_language(mut text: PreparedText, tagger: &LanguageTagger) -> PreparedText {
    text.language_tag = tagger.tag(&text);
    text
}

/// Type-7 quartiles of the character lengths.
pub fn length_quartiles(texts: &[PreparedText]) -> Result<(f64, f64, f64)> {
    let lengths: Vec<f64> = texts.iter().map(|t| t.char_length as f64).collect();
    let q = stats::quantiles(&lengths, &[0.25, 0.5, 0.75])?;
    Ok((q[0], q[1], q[2]))
}

/// Collapses whitespace runs to one space and trims.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Hex SHA-256 of a text, used to key duplicate groups in reports.
pub fn text_hash(text: &str) -> String {
    sha256_hex(text.as_bytes())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Records sharing one assembled text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuplicateGroup {
    pub text: String,
    pub member_ids: Vec<String>,
    pub marker_histogram: BTreeMap<RioMarker, usize>,
}

impl DuplicateGroup {
    pub fn size(&self) -> usize {
        self.member_ids.len()
    }

    /// Largest number of members sharing one reported marker.
    pub fn modal_count(&self) -> usize {
        self.marker_histogram.values().copied().max().unwrap_or(0)
    }
}

/// Groups of at least two records with identical (whitespace-normalized)
/// text, largest first.
pub fn find_duplicates(texts: &[PreparedText], records: &[ActivityRecord]) -> Vec<DuplicateGroup> {
    let markers: HashMap<&str, RioMarker> = records.iter().map(|r| (r.id.as_str(), r.reported_marker)).collect();
    let mut groups: BTreeMap<String, Vec<&PreparedText>> = BTreeMap::new();
    for t in texts {
        groups.entry(normalize_whitespace(&t.text)).or_default().push(t);
    }
    let mut out: Vec<DuplicateGroup> = groups
        .into_iter()
        .filter(|(_, members)| members.len() >= 2)
        .map(|(text, members)| {
            let mut histogram = BTreeMap::new();
            for m in &members {
                if let Some(&marker) = markers.get(m.id.as_str()) {
                    *histogram.entry(marker).or_insert(0) += 1;
                }
            }
            DuplicateGroup {
                text,
                member_ids: members.iter().map(|m| m.id.clone()).collect(),
                marker_histogram: histogram,
            }
        })
        .collect();
    // stable sort keeps the text order within equal sizes
    out.sort_by_key(|g| std::cmp::Reverse(g.size()));
    out
}

/// Count of records and distinct texts, with their ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniqueDescriptions {
    pub total: usize,
    pub unique: usize,
    pub ratio: f64,
}

pub fn unique_descriptions(texts: &[PreparedText]) -> UniqueDescriptions {
    let distinct: std::collections::HashSet<String> = texts.iter().map(|t| normalize_whitespace(&t.text)).collect();
    let total = texts.len();
    UniqueDescriptions {
        total,
        unique: distinct.len(),
        ratio: if total == 0 { 0.0 } else { distinct.len() as f64 / total as f64 },
    }
}

/// Highest fraction of records on which any function of the text alone can
/// reproduce the reported marker.
///
/// Each duplicate group contributes its modal marker count and each record
/// outside a group (`singles`) contributes one.
pub fn max_agreement_bound(groups: &[DuplicateGroup], total: usize, singles: usize) -> Result<f64> {
    if total == 0 {
        return Err(Error::InvalidArgument("total must be at least 1".into()));
    }
    let grouped: usize = groups.iter().map(DuplicateGroup::size).sum();
    if grouped + singles != total {
        return Err(Error::InconsistentTotals(format!(
            "{grouped} grouped + {singles} single records != {total}"
        )));
    }
    for g in groups {
        if g.marker_histogram.values().sum::<usize>() != g.size() {
            return Err(Error::InconsistentTotals(format!(
                "histogram of group with {} members does not sum to its size",
                g.size()
            )));
        }
    }
    let reachable: usize = groups.iter().map(DuplicateGroup::modal_count).sum::<usize>() + singles;
    Ok(reachable as f64 / total as f64)
}

/// Writes `text_hash,group_size,marker_0,marker_1,marker_2,example_id`.
pub fn write_duplicate_report<W: Write>(groups: &[DuplicateGroup], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["text_hash", "group_size", "marker_0", "marker_1", "marker_2", "example_id"])?;
    for g in groups {
        let count = |m: RioMarker| g.marker_histogram.get(&m).copied().unwrap_or(0).to_string();
        w.write_record([
            text_hash(&g.text),
            g.size().to_string(),
            count(RioMarker::NotTargeted),
            count(RioMarker::Significant),
            count(RioMarker::Principal),
            g.member_ids[0].clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
