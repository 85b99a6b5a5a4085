//! Deterministic synthetic CRS-like data for tests, demos and benchmarks.
//!
//! Real CRS extracts and re-evaluation sets cannot be redistributed; these
//! generators mimic their schemas. Each record gets a latent "documented"
//! marker that drives how many adaptation terms its text contains; the
//! reported marker is the documented one, inflated with some probability.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::bayes::PairedFlags;
use crate::ingest::{ActivityRecord, GoldLabel, TOP_FIVE_DONORS};
use crate::marker::RioMarker;
use crate::rng::Substream;

const ADAPTATION_TERMS: &[&str] = &[
    "drought", "flood", "resilience", "adaptation", "irrigation", "climate", "early", "warning", "coastal",
    "watershed", "erosion", "resilient", "storm", "rainfall", "salinity",
];
const NEUTRAL_TERMS: &[&str] = &[
    "school", "road", "governance", "health", "training", "equipment", "administration", "capacity", "support",
    "budget", "hospital", "teacher", "transport", "election", "census", "project", "programme", "technical",
];
const FRENCH_TERMS: &[&str] = &["le", "projet", "de", "la", "des", "communes", "pour", "et", "renforcement"];

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_records: usize,
    pub seed: u64,
    pub first_year: i32,
    pub last_year: i32,
    /// Probability that a record's reported marker is raised above the
    /// documented one.
    pub inflation: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { n_records: 1000, seed: 0, first_year: 2010, last_year: 2019, inflation: 0.6 }
    }
}

fn words<R: Rng>(rng: &mut R, pool: &[&str], n: usize) -> Vec<String> {
    (0..n).map(|_| pool.choose(rng).expect("non-empty pool").to_string()).collect()
}

/// Text whose adaptation vocabulary grows with `documented`.
pub fn synthetic_description<R: Rng>(rng: &mut R, documented: RioMarker, n_words: usize, french: bool) -> String {
    let adaptation = match documented.level() {
        0 => 0,
        1 => (n_words / 4).max(1),
        _ => (n_words / 2).max(2),
    };
    let neutral_pool = if french { FRENCH_TERMS } else { NEUTRAL_TERMS };
    let mut w = words(rng, ADAPTATION_TERMS, adaptation);
    w.extend(words(rng, neutral_pool, n_words.saturating_sub(adaptation)));
    w.shuffle_in_place(rng);
    w.join(" ")
}

trait ShuffleInPlace {
    fn shuffle_in_place<R: Rng>(&mut self, rng: &mut R);
}

impl ShuffleInPlace for Vec<String> {
    fn shuffle_in_place<R: Rng>(&mut self, rng: &mut R) {
        use rand::seq::SliceRandom;
        self.shuffle(rng);
    }
}

/// Records with reported markers in {1, 2} plus their documented markers.
pub fn synthetic_crs(config: &SynthConfig) -> (Vec<ActivityRecord>, Vec<RioMarker>) {
    let mut rng = Substream::new(config.seed, "synth-crs").rng();
    let years = (config.last_year - config.first_year + 1).max(1);
    let mut records = Vec::with_capacity(config.n_records);
    let mut documented_markers = Vec::with_capacity(config.n_records);
    for i in 0..config.n_records {
        let donor = *TOP_FIVE_DONORS.choose(&mut rng).expect("donors");
        let year = config.first_year + rng.random_range(0..years);
        let documented = match rng.random_range(0..10) {
            0..=4 => RioMarker::NotTargeted,
            5..=7 => RioMarker::Significant,
            _ => RioMarker::Principal,
        };
        let reported = if documented == RioMarker::Principal || rng.random_bool(config.inflation) {
            if documented == RioMarker::NotTargeted && rng.random_bool(0.5) {
                RioMarker::Significant
            } else {
                RioMarker::Principal
            }
        } else {
            RioMarker::from_code(i64::from(documented.level()).max(1)).expect("valid")
        };
        let french = donor == "France" && rng.random_bool(0.7);
        // Japan writes short descriptions
        let n_words = if donor == "Japan" { rng.random_range(2..8) } else { rng.random_range(6..40) };
        records.push(ActivityRecord {
            id: format!("crs-{i:06}"),
            donor: donor.to_string(),
            recipient: Some(["Kenya", "Bangladesh", "Peru", "Viet Nam", "Niger"].choose(&mut rng).expect("recipients").to_string()),
            year,
            title: words(&mut rng, if documented.level() > 0 { ADAPTATION_TERMS } else { NEUTRAL_TERMS }, 2).join(" "),
            short_description: words(&mut rng, NEUTRAL_TERMS, 3).join(" "),
            long_description: synthetic_description(&mut rng, documented, n_words, french),
            reported_marker: reported,
            language_tag: None,
        });
        documented_markers.push(documented);
    }
    (records, documented_markers)
}

/// A labeled training set: records (all markers) and gold markers that
/// follow the documented vocabulary, with a small share of 99s.
pub fn synthetic_training(n: usize, seed: u64) -> (Vec<ActivityRecord>, Vec<GoldLabel>) {
    let (mut records, documented) = synthetic_crs(&SynthConfig { n_records: n, seed, inflation: 0.3, ..Default::default() });
    let mut rng = Substream::new(seed, "synth-gold").rng();
    let mut labels = Vec::with_capacity(n);
    for (r, d) in records.iter_mut().zip(&documented) {
        r.id = r.id.replacen("crs", "wk", 1);
        let gold = if rng.random_bool(0.03) { RioMarker::Insufficient } else { *d };
        labels.push(GoldLabel { id: r.id.clone(), gold_marker: gold });
    }
    (records, labels)
}

/// Calibration flags where W holds with probability `p_w`, and C agrees
/// with W with probability `agree`.
pub fn synthetic_calibration(n: usize, p_w: f64, agree: f64, seed: u64) -> Vec<PairedFlags> {
    let mut rng = Substream::new(seed, "synth-calibration").rng();
    (0..n)
        .map(|i| {
            let w = rng.random_bool(p_w);
            let c = if rng.random_bool(agree) { w } else { !w };
            PairedFlags { char_length: Some(rng.random_range(20..600)), ..PairedFlags::new(format!("care-{i:04}"), w, c) }
        })
        .collect()
}
