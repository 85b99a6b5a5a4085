//! Shared plumbing for the small header-driven CSV and JSON-Lines inputs.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};

use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Input encoding for tabular files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputFormat {
    #[default]
    Csv,
    JsonLines,
}

impl InputFormat {
    /// Guesses the format from a file name; anything not ending in
    /// `.jsonl`, `.ndjson` or `.json` is treated as CSV.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase) {
            Some(ext) if ext == "jsonl" || ext == "ndjson" || ext == "json" => InputFormat::JsonLines,
            _ => InputFormat::Csv,
        }
    }
}

/// A row that was dropped during parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedRow {
    /// 1-based line number in the source.
    pub line: u64,
    pub reason: String,
}

/// One input row with its named fields, independent of the source format.
#[derive(Debug, Clone)]
pub(crate) struct RawRow {
    pub line: u64,
    pub fields: HashMap<String, String>,
    /// Set when the row could not be split into fields at all.
    pub broken: Option<String>,
}

impl RawRow {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.fields.get(name).map(String::as_str)
    }

    /// Trimmed, non-empty value of a field.
    pub fn non_empty(&self, name: &str) -> Option<&str> {
        self.get(name).map(str::trim).filter(|v| !v.is_empty())
    }
}

/// Reads every row of a CSV or JSON-Lines source.
///
/// CSV sources must carry a header containing every name in `required`;
/// a missing or repeated column is fatal. Rows whose field count differs
/// from the header are returned with `broken` set.
pub(crate) fn read_rows<R: Read>(source: R, format: InputFormat, required: &[&str]) -> Result<Vec<RawRow>> {
    match format {
        InputFormat::Csv => read_csv_rows(source, required),
        InputFormat::JsonLines => read_jsonl_rows(source),
    }
}

fn read_csv_rows<R: Read>(source: R, required: &[&str]) -> Result<Vec<RawRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Header(e.to_string()))?
        .iter()
        .map(|h| h.trim().trim_start_matches('\u{feff}').to_string())
        .collect();
    if headers.iter().all(String::is_empty) {
        return Err(Error::Header("empty header".into()));
    }
    for (i, h) in headers.iter().enumerate() {
        if headers[..i].contains(h) {
            return Err(Error::Header(format!("column {h:?} appears twice")));
        }
    }
    let missing: Vec<&str> = required.iter().copied().filter(|r| !headers.iter().any(|h| h == r)).collect();
    if !missing.is_empty() {
        return Err(Error::Header(format!("missing column(s): {}", missing.join(", "))));
    }

    let mut rows = Vec::new();
    for result in reader.records() {
        let record = match result {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                match e.kind() {
                    csv::ErrorKind::Utf8 { .. } | csv::ErrorKind::UnequalLengths { .. } => {
                        rows.push(RawRow { line, fields: HashMap::new(), broken: Some(e.to_string()) });
                        continue;
                    }
                    _ => return Err(e.into()),
                }
            }
        };
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != headers.len() {
            rows.push(RawRow {
                line,
                fields: HashMap::new(),
                broken: Some(format!("expected {} fields, found {}", headers.len(), record.len())),
            });
            continue;
        }
        let fields = headers.iter().cloned().zip(record.iter().map(str::to_string)).collect();
        rows.push(RawRow { line, fields, broken: None });
    }
    Ok(rows)
}

fn read_jsonl_rows<R: Read>(source: R) -> Result<Vec<RawRow>> {
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(source).lines().enumerate() {
        let line_no = idx as u64 + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Map<String, Value>>(&text) {
            Ok(obj) => {
                let fields = obj
                    .into_iter()
                    .filter_map(|(k, v)| scalar_to_string(&v).map(|s| (k, s)))
                    .collect();
                rows.push(RawRow { line: line_no, fields, broken: None });
            }
            Err(e) => rows.push(RawRow {
                line: line_no,
                fields: HashMap::new(),
                broken: Some(format!("invalid JSON object: {e}")),
            }),
        }
    }
    Ok(rows)
}

fn scalar_to_string(v: &Value) -> Option<String> {
    match v {
        Value::Null => None,
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Array(_) | Value::Object(_) => Some(v.to_string()),
    }
}

/// Parses an integer field that may have been written as `2012` or `2012.0`.
pub(crate) fn parse_integer(raw: &str) -> Option<i64> {
    let t = raw.trim();
    t.parse::<i64>().ok().or_else(|| {
        t.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite() && v.fract() == 0.0)
            .map(|v| v as i64)
    })
}

/// Parses a 0/1 style flag.
pub(crate) fn parse_flag(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "t" | "yes" => Some(true),
        "0" | "false" | "f" | "no" => Some(false),
        _ => None,
    }
}
