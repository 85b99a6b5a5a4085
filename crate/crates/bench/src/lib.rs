//! Inputs shared by the benchmarks.

use riomark_core::synth::{synthetic_calibration, synthetic_crs, synthetic_training, SynthConfig};
use riomark_core::text::assemble_text;
use riomark_core::{tokenize, ActivityRecord, PairedFlags, RioMarker};

pub const SEED: u64 = 42;

/// Tokenized training documents with their gold markers.
pub fn training_docs(n: usize) -> (Vec<String>, Vec<Vec<String>>, Vec<RioMarker>) {
    let (records, gold) = synthetic_training(n, SEED);
    let texts: Vec<String> = records.iter().map(|r| assemble_text(r).text).collect();
    let docs = texts.iter().map(|t| tokenize(t)).collect();
    (texts, docs, gold.iter().map(|g| g.gold_marker).collect())
}

pub fn crs_records(n: usize) -> Vec<ActivityRecord> {
    synthetic_crs(&SynthConfig { n_records: n, seed: SEED, ..Default::default() }).0
}

pub fn calibration(n: usize) -> Vec<PairedFlags> {
    synthetic_calibration(n, 0.6, 0.8, SEED)
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixtures_have_requested_sizes() {
        let (texts, docs, labels) = super::training_docs(50);
        assert_eq!((texts.len(), docs.len(), labels.len()), (50, 50, 50));
        assert_eq!(super::crs_records(20).len(), 20);
        assert_eq!(super::calibration(30).len(), 30);
    }
}
