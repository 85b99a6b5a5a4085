//! Reading input files and recording their digests.

use std::path::Path;

use anyhow::{Context, Result};
use log::warn;
use riomark_core::bayes::parse_paired_flags;
use riomark_core::classifier::load_external_predictions;
use riomark_core::ingest::{parse_gold_labels, ParseOptions};
use riomark_core::text::LanguageTagger;
use riomark_core::{parse_records, ActivityRecord, GoldLabel, InputFormat, LinearModel, PairedFlags, PredictionSet, SkippedRow};

use crate::output::RunManifest;

fn read(path: &Path, role: &str, manifest: &mut RunManifest) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {} ({role})", path.display()))?;
    manifest.add_input(role, path, &bytes);
    Ok(bytes)
}

fn report_skipped(path: &Path, skipped: &[SkippedRow]) {
    if !skipped.is_empty() {
        warn!("{}: skipped {} malformed row(s)", path.display(), skipped.len());
    }
}

pub fn records(path: &Path, role: &str, strict: bool, manifest: &mut RunManifest) -> Result<Vec<ActivityRecord>> {
    let bytes = read(path, role, manifest)?;
    let out = parse_records(bytes.as_slice(), InputFormat::from_path(path), ParseOptions { strict })
        .with_context(|| format!("parsing {}", path.display()))?;
    report_skipped(path, &out.skipped);
    Ok(out.records)
}

pub fn gold(path: &Path, role: &str, strict: bool, manifest: &mut RunManifest) -> Result<Vec<GoldLabel>> {
    let bytes = read(path, role, manifest)?;
    let out = parse_gold_labels(bytes.as_slice(), InputFormat::from_path(path), ParseOptions { strict })
        .with_context(|| format!("parsing {}", path.display()))?;
    report_skipped(path, &out.skipped);
    Ok(out.labels)
}

pub fn model(path: &Path, manifest: &mut RunManifest) -> Result<LinearModel> {
    let bytes = read(path, "model", manifest)?;
    LinearModel::read_json(bytes.as_slice()).with_context(|| format!("loading model {}", path.display()))
}

pub fn predictions(path: &Path, manifest: &mut RunManifest) -> Result<PredictionSet> {
    let bytes = read(path, "predictions", manifest)?;
    let (set, skipped) = load_external_predictions(bytes.as_slice(), InputFormat::from_path(path))
        .with_context(|| format!("parsing {}", path.display()))?;
    report_skipped(path, &skipped);
    Ok(set)
}

pub fn language_tags(path: &Path, manifest: &mut RunManifest) -> Result<LanguageTagger> {
    let bytes = read(path, "language_tags", manifest)?;
    LanguageTagger::from_reader(bytes.as_slice(), InputFormat::from_path(path)).with_context(|| format!("parsing {}", path.display()))
}

pub fn calibration(path: &Path, manifest: &mut RunManifest) -> Result<Vec<PairedFlags>> {
    let bytes = read(path, "calibration", manifest)?;
    let (pairs, skipped) = parse_paired_flags(bytes.as_slice(), InputFormat::from_path(path))
        .with_context(|| format!("parsing {}", path.display()))?;
    report_skipped(path, &skipped);
    Ok(pairs)
}
