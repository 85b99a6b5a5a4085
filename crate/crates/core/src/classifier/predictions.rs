use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marker::RioMarker;
use crate::table::{parse_integer, read_rows, InputFormat, SkippedRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionSource {
    Builtin,
    External,
}

/// One predicted marker per record id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub source: PredictionSource,
    pub predictions: BTreeMap<String, RioMarker>,
}

impl PredictionSet {
    pub fn get(&self, id: &str) -> Option<RioMarker> {
        self.predictions.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }

    /// Fails with the full list of ids that have no prediction.
    pub fn require<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Result<()> {
        let missing: Vec<String> = ids.into_iter().filter(|id| !self.predictions.contains_key(*id)).map(str::to_string).collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::MissingPredictions(missing))
        }
    }

    /// Writes `id,predicted_marker` sorted by id.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["id", "predicted_marker"])?;
        for (id, m) in &self.predictions {
            w.write_record([id.as_str(), &m.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads `id,predicted_marker` rows produced by an external model.
///
/// Rows with a marker outside {0, 1, 2, 99} are rejected and returned with
/// their line number; a repeated id is fatal.
pub fn load_external_predictions<R: Read>(source: R, format: InputFormat) -> Result<(PredictionSet, Vec<SkippedRow>)> {
    let rows = read_rows(source, format, &["id", "predicted_marker"])?;
    let mut predictions = HashMap::new();
    let mut rejected = Vec::new();
    for row in rows {
        let parsed = (|| {
            if let Some(reason) = &row.broken {
                return Err(reason.clone());
            }
            let id = row.non_empty("id").ok_or("missing id")?;
            let raw = row.non_empty("predicted_marker").ok_or("missing predicted_marker")?;
            let code = parse_integer(raw).ok_or_else(|| format!("marker {raw:?} is not an integer"))?;
            let marker = RioMarker::from_code(code).ok_or("marker out of range")?;
            Ok((id.to_string(), marker))
        })();
        match parsed {
            Ok((id, marker)) => {
                if predictions.insert(id.clone(), marker).is_some() {
                    return Err(Error::DuplicateId(id));
                }
            }
            Err(reason) => {
                warn!("rejecting prediction on line {}: {}", row.line, reason);
                rejected.push(SkippedRow { line: row.line, reason });
            }
        }
    }
    Ok((
        PredictionSet { source: PredictionSource::External, predictions: predictions.into_iter().collect() },
        rejected,
    ))
}
