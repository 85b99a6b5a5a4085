#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::seq::IndexedRandom;
use riomark_core::ingest::write_records_csv;
use riomark_core::rng::Substream;
use riomark_core::{ActivityRecord, GoldLabel, PairedFlags, RioMarker};

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_riomark"))
}

pub fn riomark<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(bin()).args(args).env_remove("RIOMARK_SEED").output().expect("spawn riomark")
}

pub fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "riomark failed ({:?}):\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

pub fn record(id: &str, donor: &str, year: i32, long: &str, marker: RioMarker) -> ActivityRecord {
    ActivityRecord {
        id: id.into(),
        donor: donor.into(),
        recipient: None,
        year,
        title: String::new(),
        short_description: String::new(),
        long_description: long.into(),
        reported_marker: marker,
        language_tag: None,
    }
}

pub fn write_records(path: &Path, records: &[ActivityRecord]) {
    write_records_csv(records, std::fs::File::create(path).unwrap()).unwrap();
}

pub fn write_gold(path: &Path, labels: &[GoldLabel]) {
    let mut s = String::from("id,gold_marker\n");
    for l in labels {
        s.push_str(&format!("{},{}\n", l.id, l.gold_marker.code()));
    }
    std::fs::write(path, s).unwrap();
}

pub fn write_predictions(path: &Path, preds: &[(String, RioMarker)]) {
    let mut s = String::from("id,predicted_marker\n");
    for (id, m) in preds {
        s.push_str(&format!("{id},{}\n", m.code()));
    }
    std::fs::write(path, s).unwrap();
}

pub fn write_calibration(path: &Path, pairs: &[PairedFlags]) {
    let mut s = String::from("id,w_flag,c_flag,char_length\n");
    for p in pairs {
        let len = p.char_length.map(|l| l.to_string()).unwrap_or_default();
        s.push_str(&format!("{},{},{},{len}\n", p.id, u8::from(p.w), u8::from(p.c)));
    }
    std::fs::write(path, s).unwrap();
}

/// Calibration pairs with the given joint counts of (W, C).
pub fn calibration_counts(both: usize, w_only: usize, c_only: usize, neither: usize) -> Vec<PairedFlags> {
    let mut out = Vec::new();
    let mut push = |n: usize, w: bool, c: bool| {
        for _ in 0..n {
            let id = format!("cal-{:05}", out.len());
            out.push(PairedFlags::new(id, w, c));
        }
    };
    push(both, true, true);
    push(w_only, true, false);
    push(c_only, false, true);
    push(neither, false, false);
    out
}

const VOCAB: [&[&str]; 3] = [
    &["school", "road", "budget", "census", "election", "hospital"],
    &["irrigation", "watershed", "erosion", "rainfall", "salinity", "coastal"],
    &["drought", "flood", "resilience", "adaptation", "storm", "warning"],
];

/// Documents whose class is fully determined by a disjoint vocabulary.
pub fn separable_corpus(n: usize, seed: u64) -> (Vec<ActivityRecord>, Vec<GoldLabel>) {
    let mut rng = Substream::new(seed, "separable-fixture").rng();
    let classes = [RioMarker::NotTargeted, RioMarker::Significant, RioMarker::Principal];
    let mut records = Vec::new();
    let mut gold = Vec::new();
    for i in 0..n {
        let c = i % 3;
        let words: Vec<&str> = (0..6).map(|_| *VOCAB[c].choose(&mut rng).unwrap()).collect();
        let id = format!("doc-{i:04}");
        records.push(record(&id, "France", 2015, &words.join(" "), classes[c]));
        gold.push(GoldLabel { id, gold_marker: classes[c] });
    }
    (records, gold)
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|row| row.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}
