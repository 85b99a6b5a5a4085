use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use riomark_bench::{calibration, crs_records, training_docs, SEED};
use riomark_core::classifier::fit_features;
use riomark_core::text::TextOptions;
use riomark_core::{correction_factor, kfold_cv, run_estimate, EstimateConfig, EstimateInputs, Hyper, LinearModel};

fn bench_correction_factor(c: &mut Criterion) {
    let pairs = calibration(300);
    let mut group = c.benchmark_group("correction_factor");
    for n in [10_000usize, 100_000] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| correction_factor(black_box(&pairs), n, SEED).unwrap())
        });
    }
    group.finish();
}

fn bench_features(c: &mut Criterion) {
    let (_, docs, _) = training_docs(2000);
    c.bench_function("fit_features/2000", |b| b.iter(|| fit_features(black_box(&docs), 1).unwrap()));
}

fn bench_training(c: &mut Criterion) {
    let (texts, docs, labels) = training_docs(1000);
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let hyper = Hyper { seed: SEED, epochs: 10, ..Hyper::default() };
    let mut group = c.benchmark_group("training");
    group.sample_size(10);
    group.bench_function("fit/1000", |b| {
        b.iter(|| LinearModel::fit(black_box(&refs), &labels, &hyper, TextOptions::default(), None).unwrap())
    });
    group.bench_function("cv10/1000", |b| b.iter(|| kfold_cv(black_box(&docs), &labels, 10, &hyper).unwrap()));
    group.finish();
}

fn bench_estimate(c: &mut Criterion) {
    let (texts, _, labels) = training_docs(800);
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let hyper = Hyper { seed: SEED, epochs: 10, ..Hyper::default() };
    let (model, _) = LinearModel::fit(&refs, &labels, &hyper, TextOptions::default(), None).unwrap();
    let records = crs_records(5000);
    let predictions = model.predict_records(&records);
    let cal = calibration(300);
    let config = EstimateConfig { seed: SEED, ..EstimateConfig::default() };
    let mut group = c.benchmark_group("estimate");
    group.sample_size(10);
    group.bench_function("predict/5000", |b| b.iter(|| model.predict_records(black_box(&records))));
    group.bench_function("run/5000", |b| {
        b.iter(|| {
            let inputs = EstimateInputs { records: &records, predictions: &predictions, calibration: &cal };
            run_estimate(black_box(inputs), &config).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_correction_factor, bench_features, bench_training, bench_estimate);
criterion_main!(benches);
