//! Subcommand implementations.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use log::{info, warn};
use riomark_core::bayes::DEFAULT_SAMPLES;
use riomark_core::classifier::{holdout_split, TrainingTrace};
use riomark_core::diagnostics::{length_report, resolve_cutoff, unique_ratio_by_donor_year, write_bins_csv};
use riomark_core::estimator::{write_flags_csv, write_rates_csv};
use riomark_core::ingest::TOP_FIVE_DONORS;
use riomark_core::pipeline::{calibration_from_gold, CorrectedRow};
use riomark_core::text::{
    assemble_text_with, tag_language, unique_descriptions, write_duplicate_report, LanguageTagger, TextOptions,
};
use riomark_core::{
    agreement_by_length, apply_filter, find_duplicates, join_gold, kfold_cv, max_agreement_bound, metrics,
    rerun_excluding_short, run_estimate, tokenize, ActivityRecord, CvReport, DatasetFilter, EstimateConfig,
    EstimateInputs, EstimateRun, ExcludeShort, Hyper, LengthSource, LinearModel, MetricSet, PairedFlags,
    PredictionSet, RioMarker,
};
use serde::Serialize;

use crate::config::ConfigFile;
use crate::output::{pct, write_atomic, ReportDir, RunManifest};
use crate::{load, CvArgs, DiagnoseArgs, EstimateArgs, FilterArgs, HyperArgs, InputArgs, PredictArgs, TrainArgs, UsageError};

/// Share of the gold-labelled data held out by `train`.
pub const EVAL_FRACTION: f64 = 0.2;
pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_BINS: usize = 20;

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn resolve_hyper(cfg: &ConfigFile, args: &HyperArgs, seed: u64) -> Result<Hyper> {
    let d = Hyper::default();
    let hyper = Hyper {
        l2: cfg.resolve(args.l2, "l2", d.l2)?,
        lr: cfg.resolve(args.lr, "lr", d.lr)?,
        epochs: cfg.resolve(args.epochs, "epochs", d.epochs)?,
        batch_size: cfg.resolve(args.batch_size, "batch_size", d.batch_size)?,
        min_df: cfg.resolve(args.min_df, "min_df", d.min_df)?,
        seed,
    };
    hyper.validate()?;
    Ok(hyper)
}

fn record_hyper(manifest: &mut RunManifest, hyper: &Hyper) {
    manifest.set("l2", hyper.l2);
    manifest.set("lr", hyper.lr);
    manifest.set("epochs", hyper.epochs);
    manifest.set("batch_size", hyper.batch_size);
    manifest.set("min_df", hyper.min_df);
}

fn text_options(cfg: &ConfigFile, args: &InputArgs) -> Result<TextOptions> {
    Ok(TextOptions {
        include_short_description: cfg.switch(args.include_short_description, "include_short_description")?,
    })
}

fn resolve_filter(cfg: &ConfigFile, args: &FilterArgs, manifest: &mut RunManifest) -> Result<DatasetFilter> {
    let length_source: LengthSource = cfg.resolve(
        args.length_source.as_deref().map(str::parse).transpose()?,
        "length_source",
        LengthSource::default(),
    )?;
    let mut filter = DatasetFilter {
        min_reported_marker: cfg.resolve(args.min_reported_marker, "min_reported_marker", 1)?,
        length_source,
        ..DatasetFilter::default()
    };
    let donors: Option<Vec<String>> = match &args.donors {
        Some(d) => Some(d.clone()),
        None if cfg.switch(args.top_five, "top_five")? => Some(TOP_FIVE_DONORS.iter().map(|s| s.to_string()).collect()),
        None => cfg
            .get::<String>("donors")?
            .map(|raw| raw.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()),
    };
    if let Some(donors) = donors {
        manifest.set("donors", donors.join(","));
        filter = filter.with_donors(donors);
    }
    let year_range = cfg.resolve_opt(args.year_range.clone(), "year_range")?;
    if let Some(raw) = year_range {
        filter.year_range = Some(parse_year_range(&raw)?);
        manifest.set("year_range", raw);
    }
    filter.validate()?;
    manifest.set("min_reported_marker", filter.min_reported_marker);
    manifest.set("length_source", filter.length_source);
    Ok(filter)
}

/// `2010-2019`, `2010:2019` or a single year.
pub fn parse_year_range(raw: &str) -> Result<(i32, i32)> {
    let bad = || usage(format!("year range {raw:?} is not FROM-TO"));
    let parts: Vec<&str> = raw.split(['-', ':']).map(str::trim).collect();
    let (lo, hi) = match parts.as_slice() {
        [one] => (*one, *one),
        [lo, hi] => (*lo, *hi),
        _ => return Err(bad()),
    };
    let lo = lo.parse().map_err(|_| bad())?;
    let hi = hi.parse().map_err(|_| bad())?;
    Ok((lo, hi))
}

struct LabelledCorpus {
    texts: Vec<String>,
    labels: Vec<RioMarker>,
}

fn labelled_corpus(
    data: &Path,
    gold: &Path,
    strict: bool,
    opts: TextOptions,
    manifest: &mut RunManifest,
) -> Result<LabelledCorpus> {
    let records = load::records(data, "data", strict, manifest)?;
    let labels = load::gold(gold, "gold", strict, manifest)?;
    let joined = join_gold(&records, &labels)?;
    if !joined.unmatched_labels.is_empty() {
        warn!("{} gold label(s) have no matching record", joined.unmatched_labels.len());
    }
    if joined.unmatched_records > 0 {
        info!("{} record(s) have no gold label", joined.unmatched_records);
    }
    Ok(LabelledCorpus {
        texts: joined.pairs.iter().map(|(r, _)| assemble_text_with(r, opts).text).collect(),
        labels: joined.pairs.iter().map(|(_, g)| *g).collect(),
    })
}

fn run_cv(corpus: &LabelledCorpus, k: usize, hyper: &Hyper) -> Result<CvReport> {
    if k > corpus.texts.len() {
        return Err(usage(format!("k = {k} exceeds the {} labelled examples", corpus.texts.len())));
    }
    let docs: Vec<Vec<String>> = corpus.texts.iter().map(|t| tokenize(t)).collect();
    Ok(kfold_cv(&docs, &corpus.labels, k, hyper)?)
}

#[derive(Serialize)]
struct TrainReport<'a> {
    n_labelled: usize,
    n_train: usize,
    n_eval: usize,
    model_sha256: String,
    holdout: &'a MetricSet,
    trace: &'a TrainingTrace,
    cv: Option<&'a CvReport>,
}

pub fn train(cfg: &ConfigFile, args: &TrainArgs) -> Result<()> {
    let seed = cfg.seed(args.hyper.seed)?;
    let hyper = resolve_hyper(cfg, &args.hyper, seed)?;
    let opts = text_options(cfg, &args.input)?;
    let strict = cfg.switch(args.input.strict, "strict")?;
    let mut manifest = RunManifest::new("train", seed);
    record_hyper(&mut manifest, &hyper);
    manifest.set("include_short_description", opts.include_short_description);
    let corpus = labelled_corpus(&args.data, &args.gold, strict, opts, &mut manifest)?;

    let k = cfg.resolve_opt(args.k, "k")?;
    let cv = match k {
        Some(k) => {
            manifest.set("k", k);
            let report = run_cv(&corpus, k, &hyper)?;
            println!("{k}-fold CV: {}", report.summary());
            Some(report)
        }
        None => None,
    };

    let (train_idx, eval_idx) = holdout_split(corpus.texts.len(), EVAL_FRACTION, seed)?;
    let pick_texts = |idx: &[usize]| idx.iter().map(|&i| corpus.texts[i].as_str()).collect::<Vec<_>>();
    let pick_labels = |idx: &[usize]| idx.iter().map(|&i| corpus.labels[i]).collect::<Vec<_>>();
    let (train_texts, train_labels) = (pick_texts(&train_idx), pick_labels(&train_idx));
    let (eval_texts, eval_labels) = (pick_texts(&eval_idx), pick_labels(&eval_idx));
    let (model, trace) =
        LinearModel::fit(&train_texts, &train_labels, &hyper, opts, Some((&eval_texts, &eval_labels)))?;
    let eval_pred: Vec<RioMarker> = eval_texts.iter().map(|t| model.predict_text(t)).collect();
    let holdout = metrics(&eval_labels, &eval_pred)?;

    let mut bytes = Vec::new();
    model.write_json(&mut bytes)?;
    write_atomic(&args.model_out, &bytes)?;
    println!(
        "held-out {} of {}: accuracy {}, macro F1 {} (best epoch {})",
        eval_idx.len(),
        corpus.texts.len(),
        pct(holdout.accuracy),
        pct(holdout.macro_f1),
        trace.best_epoch + 1
    );
    println!("model written to {}", args.model_out.display());

    if let Some(out) = &args.out {
        let mut dir = ReportDir::create(out)?;
        let report = TrainReport {
            n_labelled: corpus.texts.len(),
            n_train: train_idx.len(),
            n_eval: eval_idx.len(),
            model_sha256: riomark_core::text::sha256_hex(&bytes),
            holdout: &holdout,
            trace: &trace,
            cv: cv.as_ref(),
        };
        dir.write_json("train_report.json", &report, &manifest.digest())?;
        if let Some(cv) = &cv {
            dir.write_json("cv_report.json", cv, &manifest.digest())?;
        }
        dir.finish(manifest)?;
    }
    Ok(())
}

pub fn cv(cfg: &ConfigFile, args: &CvArgs) -> Result<()> {
    let seed = cfg.seed(args.hyper.seed)?;
    let hyper = resolve_hyper(cfg, &args.hyper, seed)?;
    let opts = text_options(cfg, &args.input)?;
    let strict = cfg.switch(args.input.strict, "strict")?;
    let k = cfg.resolve(args.k, "k", DEFAULT_FOLDS)?;
    let mut manifest = RunManifest::new("cv", seed);
    record_hyper(&mut manifest, &hyper);
    manifest.set("k", k);
    manifest.set("include_short_description", opts.include_short_description);
    let corpus = labelled_corpus(&args.data, &args.gold, strict, opts, &mut manifest)?;
    let report = run_cv(&corpus, k, &hyper)?;
    println!("{k}-fold CV: {}", report.summary());
    if let Some(out) = &args.out {
        let mut dir = ReportDir::create(out)?;
        dir.write_json("cv_report.json", &report, &manifest.digest())?;
        dir.finish(manifest)?;
    }
    Ok(())
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> riomark_core::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

pub fn predict(cfg: &ConfigFile, args: &PredictArgs) -> Result<()> {
    let strict = cfg.switch(args.strict, "strict")?;
    let mut manifest = RunManifest::new("predict", 0);
    let model = load::model(&args.model, &mut manifest)?;
    let records = load::records(&args.records, "records", strict, &mut manifest)?;
    let predictions = model.predict_records(&records);
    let mut dir = ReportDir::create(&args.out)?;
    dir.write("predictions.csv", &csv_bytes(|b| predictions.write_csv(b))?)?;
    dir.finish(manifest)?;
    println!("{} predictions written to {}", predictions.len(), args.out.join("predictions.csv").display());
    Ok(())
}

/// Rows of `corrected.csv`.
#[derive(Serialize)]
struct CorrectedCsvRow<'a> {
    donor: &'a str,
    year: Option<i32>,
    n: usize,
    n_overreported: usize,
    raw_rate: f64,
    corrected_point: f64,
    corrected_lo: f64,
    corrected_hi: f64,
    low_n: bool,
}

impl<'a> From<&'a CorrectedRow> for CorrectedCsvRow<'a> {
    fn from(row: &'a CorrectedRow) -> Self {
        Self {
            donor: row.rate.donor.as_deref().unwrap_or(""),
            year: row.rate.year,
            n: row.rate.n,
            n_overreported: row.rate.n_overreported,
            raw_rate: row.rate.rate,
            corrected_point: row.corrected.point,
            corrected_lo: row.corrected.ci95.0,
            corrected_hi: row.corrected.ci95.1,
            low_n: row.rate.low_n,
        }
    }
}

#[derive(Serialize)]
struct YearTableRow {
    year: i32,
    classifier_rate: f64,
    care_lo: f64,
    care_hi: f64,
    count: usize,
}

fn serialize_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

/// Writes the tables of one estimation pass under `prefix`.
fn write_run(dir: &mut ReportDir, prefix: &str, run: &EstimateRun, digest: &str) -> Result<()> {
    let name = |f: &str| format!("{prefix}{f}");
    dir.write(&name("flags.csv"), &csv_bytes(|b| write_flags_csv(&run.flags.flags, b))?)?;
    let with_overall = |rows: &[CorrectedRow]| {
        std::iter::once(run.overall.rate.clone()).chain(rows.iter().map(|r| r.rate.clone())).collect::<Vec<_>>()
    };
    dir.write(&name("rates_by_year.csv"), &csv_bytes(|b| write_rates_csv(&with_overall(&run.by_year), b))?)?;
    dir.write(
        &name("rates_by_donor_year.csv"),
        &csv_bytes(|b| write_rates_csv(&with_overall(&run.by_donor_year), b))?,
    )?;
    let year_table = run.by_year.iter().map(|r| YearTableRow {
        year: r.rate.year.expect("year stratum"),
        classifier_rate: r.rate.rate,
        care_lo: r.corrected.ci95.0,
        care_hi: r.corrected.ci95.1,
        count: r.rate.n,
    });
    dir.write(&name("year_table.csv"), &serialize_csv(year_table)?)?;
    let corrected = std::iter::once(&run.overall).chain(&run.by_year).chain(&run.by_donor_year).map(CorrectedCsvRow::from);
    dir.write(&name("corrected.csv"), &serialize_csv(corrected)?)?;
    dir.write_json(&name("factor.json"), &run.factor.to_json(), digest)?;
    Ok(())
}

#[derive(Serialize)]
struct RunSummary {
    n_records: usize,
    n_overreported: usize,
    underreported: usize,
    raw_rate: f64,
    corrected_point: f64,
    corrected_ci95: (f64, f64),
    factor_point: f64,
    factor_ci95: (f64, f64),
}

impl From<&EstimateRun> for RunSummary {
    fn from(run: &EstimateRun) -> Self {
        Self {
            n_records: run.overall.rate.n,
            n_overreported: run.overall.rate.n_overreported,
            underreported: run.flags.underreported,
            raw_rate: run.overall.rate.rate,
            corrected_point: run.overall.corrected.point,
            corrected_ci95: run.overall.corrected.ci95,
            factor_point: run.factor.point,
            factor_ci95: run.factor.ci95,
        }
    }
}

#[derive(Serialize)]
struct CalibrationSummary {
    n: usize,
    w_rate: f64,
    c_rate: f64,
}

#[derive(Serialize)]
struct ShortTextSummary {
    cutoff: f64,
    length_source: LengthSource,
    excluded_records: usize,
    excluded_calibration: usize,
    calibration_without_length: usize,
    filtered: RunSummary,
}

#[derive(Serialize)]
struct EstimateSummary {
    input_records: usize,
    input_zero_marker: usize,
    analysis_records: usize,
    prediction_source: riomark_core::classifier::PredictionSource,
    calibration: CalibrationSummary,
    primary: RunSummary,
    exclude_short: Option<ShortTextSummary>,
}

fn summary_text(s: &EstimateSummary) -> String {
    let mut out = String::new();
    let run = |out: &mut String, label: &str, r: &RunSummary| {
        out.push_str(&format!(
            "{label}: {} records, {} overreported, raw rate {}, corrected {} [{}; {}], factor {} [{}; {}]\n",
            r.n_records,
            r.n_overreported,
            pct(r.raw_rate),
            pct(r.corrected_point),
            pct(r.corrected_ci95.0),
            pct(r.corrected_ci95.1),
            pct(r.factor_point),
            pct(r.factor_ci95.0),
            pct(r.factor_ci95.1),
        ));
    };
    out.push_str(&format!(
        "input records: {} ({} reported as 0), analysis frame: {}\n",
        s.input_records, s.input_zero_marker, s.analysis_records
    ));
    out.push_str(&format!(
        "calibration: {} pairs, W flagged {}, C flagged {}\n",
        s.calibration.n,
        pct(s.calibration.w_rate),
        pct(s.calibration.c_rate)
    ));
    run(&mut out, "all records", &s.primary);
    if let Some(x) = &s.exclude_short {
        out.push_str(&format!(
            "short-text exclusion: cutoff {:.2} chars ({}), {} records and {} calibration pairs removed\n",
            x.cutoff, x.length_source, x.excluded_records, x.excluded_calibration
        ));
        run(&mut out, "without short texts", &x.filtered);
    }
    out
}

pub fn estimate(cfg: &ConfigFile, args: &EstimateArgs) -> Result<()> {
    let seed = cfg.seed(args.seed)?;
    let n_samples = cfg.resolve(args.samples, "samples", DEFAULT_SAMPLES)?;
    if n_samples == 0 {
        return Err(usage("--samples must be positive"));
    }
    let strict = cfg.switch(args.strict, "strict")?;
    let exclude: ExcludeShort = cfg.resolve(
        args.exclude_short.as_deref().map(str::parse).transpose()?,
        "exclude_short",
        ExcludeShort::Off,
    )?;
    let mut manifest = RunManifest::new("estimate", seed);
    manifest.set("samples", n_samples);
    manifest.set("exclude_short", serde_json::to_string(&exclude)?);
    let filter = resolve_filter(cfg, &args.filter, &mut manifest)?;
    let config = EstimateConfig { n_samples, seed, length_source: filter.length_source };

    let all_records = load::records(&args.records, "records", strict, &mut manifest)?;
    let input_zero_marker = all_records.iter().filter(|r| r.reported_marker == RioMarker::NotTargeted).count();
    let records = apply_filter(&all_records, &filter);
    info!("analysis frame: {} of {} records", records.len(), all_records.len());

    let (model, external) = match (&args.model, &args.predictions) {
        (Some(m), _) => (Some(load::model(m, &mut manifest)?), None),
        (None, Some(p)) => (None, Some(load::predictions(p, &mut manifest)?)),
        (None, None) => return Err(usage("either --model or --predictions is required")),
    };
    let predictions: PredictionSet = match (&model, &external) {
        (Some(m), _) => m.predict_records(&records),
        (_, Some(p)) => p.clone(),
        _ => unreachable!(),
    };

    let calibration: Vec<PairedFlags> = match (&args.calibration, &args.calibration_records, &args.calibration_gold) {
        (Some(path), _, _) => load::calibration(path, &mut manifest)?,
        (None, Some(rec_path), Some(gold_path)) => {
            let cal_records = load::records(rec_path, "calibration_records", strict, &mut manifest)?;
            let gold = load::gold(gold_path, "calibration_gold", strict, &mut manifest)?;
            let cal_predictions = match (&model, &external) {
                (Some(m), _) => m.predict_records(&cal_records),
                (_, Some(p)) => p.clone(),
                _ => unreachable!(),
            };
            calibration_from_gold(&cal_records, &gold, &cal_predictions, filter.length_source)
                .context("deriving calibration pairs")?
        }
        _ => return Err(usage("either --calibration or --calibration-records with --calibration-gold is required")),
    };
    if calibration.is_empty() {
        return Err(usage("calibration set is empty"));
    }

    let inputs = EstimateInputs { records: &records, predictions: &predictions, calibration: &calibration };
    let cutoff = resolve_cutoff(exclude, &records, filter.length_source)?;
    let (primary, rerun) = match cutoff {
        Some(c) => {
            let rerun = rerun_excluding_short(inputs, c, &config)?;
            (rerun.primary.clone(), Some(rerun))
        }
        None => (run_estimate(inputs, &config)?, None),
    };

    let digest = manifest.digest();
    let mut dir = ReportDir::create(&args.out)?;
    write_run(&mut dir, "", &primary, &digest)?;
    if let Some(r) = &rerun {
        write_run(&mut dir, "filtered/", &r.filtered, &digest)?;
    }
    let n_cal = calibration.len() as f64;
    let summary = EstimateSummary {
        input_records: all_records.len(),
        input_zero_marker,
        analysis_records: records.len(),
        prediction_source: predictions.source,
        calibration: CalibrationSummary {
            n: calibration.len(),
            w_rate: calibration.iter().filter(|p| p.w).count() as f64 / n_cal,
            c_rate: calibration.iter().filter(|p| p.c).count() as f64 / n_cal,
        },
        primary: RunSummary::from(&primary),
        exclude_short: rerun.as_ref().map(|r| ShortTextSummary {
            cutoff: r.cutoff,
            length_source: r.length_source,
            excluded_records: r.excluded_records,
            excluded_calibration: r.excluded_calibration,
            calibration_without_length: r.calibration_without_length,
            filtered: RunSummary::from(&r.filtered),
        }),
    };
    dir.write_json("summary.json", &summary, &digest)?;
    let text = summary_text(&summary);
    dir.write("summary.txt", text.as_bytes())?;
    dir.finish(manifest)?;
    print!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct LanguageRow<'a> {
    donor: &'a str,
    year: i32,
    language_tag: &'a str,
    n: usize,
}

#[derive(Serialize)]
struct DiagnoseSummary {
    n_records: usize,
    unique_descriptions: usize,
    unique_ratio: f64,
    duplicate_groups: usize,
    records_in_duplicate_groups: usize,
    max_agreement_bound: f64,
    agreement_bins: bool,
}

pub fn diagnose(cfg: &ConfigFile, args: &DiagnoseArgs) -> Result<()> {
    let strict = cfg.switch(args.input.strict, "strict")?;
    let opts = text_options(cfg, &args.input)?;
    let n_bins = cfg.resolve(args.bins, "bins", DEFAULT_BINS)?;
    let mut manifest = RunManifest::new("diagnose", 0);
    manifest.set("bins", n_bins);
    manifest.set("include_short_description", opts.include_short_description);
    let filter = resolve_filter(cfg, &args.filter, &mut manifest)?;
    let all_records = load::records(&args.records, "records", strict, &mut manifest)?;
    let records: Vec<ActivityRecord> = apply_filter(&all_records, &filter);
    let predictions = match (&args.model, &args.predictions) {
        (Some(m), _) => Some(load::model(m, &mut manifest)?.predict_records(&records)),
        (None, Some(p)) => Some(load::predictions(p, &mut manifest)?),
        (None, None) => None,
    };
    let tagger = match &args.language_tags {
        Some(path) => load::language_tags(path, &mut manifest)?,
        None => LanguageTagger::Heuristic,
    };
    let digest = manifest.digest();
    let mut dir = ReportDir::create(&args.out)?;

    let lengths = length_report(&records, filter.length_source)?;
    dir.write_json("length_report.json", &lengths, &digest)?;
    println!(
        "lengths ({}): median {:.1}, IQR fence {:.2} chars (log {:.2})",
        lengths.length_source, lengths.median, lengths.cutoff, lengths.log_cutoff
    );

    match &predictions {
        Some(p) => {
            let bins = agreement_by_length(&records, p, n_bins, filter.length_source)?;
            dir.write("agreement_bins.csv", &csv_bytes(|b| write_bins_csv(&bins, b))?)?;
        }
        None => println!("notice: no predictions supplied, agreement_bins.csv skipped"),
    }

    let texts: Vec<_> = records
        .iter()
        .map(|r| {
            let t = assemble_text_with(r, opts);
            if r.language_tag.is_some() {
                t
            } else {
                tag_language(t, &tagger)
            }
        })
        .collect();
    let mut languages: BTreeMap<(&str, i32, &str), usize> = BTreeMap::new();
    for (r, t) in records.iter().zip(&texts) {
        *languages.entry((r.donor.as_str(), r.year, t.language_tag.as_str())).or_default() += 1;
    }
    let language_rows = languages.into_iter().map(|((donor, year, language_tag), n)| LanguageRow { donor, year, language_tag, n });
    dir.write("languages.csv", &serialize_csv(language_rows)?)?;
    let groups = find_duplicates(&texts, &records);
    dir.write("duplicates.csv", &csv_bytes(|b| write_duplicate_report(&groups, b))?)?;
    let grouped: usize = groups.iter().map(|g| g.size()).sum();
    let bound = max_agreement_bound(&groups, records.len(), records.len() - grouped)?;
    let unique = unique_descriptions(&texts);
    dir.write("unique_ratios.csv", &serialize_csv(unique_ratio_by_donor_year(&records, opts))?)?;

    let summary = DiagnoseSummary {
        n_records: records.len(),
        unique_descriptions: unique.unique,
        unique_ratio: unique.ratio,
        duplicate_groups: groups.len(),
        records_in_duplicate_groups: grouped,
        max_agreement_bound: bound,
        agreement_bins: predictions.is_some(),
    };
    dir.write_json("diagnose_summary.json", &summary, &digest)?;
    dir.finish(manifest)?;
    println!(
        "{} duplicate group(s) covering {} records; text-only agreement ceiling {}",
        groups.len(),
        grouped,
        pct(bound)
    );
    Ok(())
}
