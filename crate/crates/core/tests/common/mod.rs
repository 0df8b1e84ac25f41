#![allow(dead_code)]

pub mod oracle;

use std::path::{Path, PathBuf};

use cupcleaner::anchor::AnchorConfig;
use cupcleaner::corpus::{load_dataset, Sample, Split};
use cupcleaner::pipeline::{CleanConfig, CleanInputs};
use cupcleaner::scoring::ScoringConfig;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synthetic")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn fixture_inputs(with_test: bool) -> CleanInputs {
    let dir = fixture_dir();
    let load = |split: Split| load_dataset(&dir.join(format!("{split}.jsonl")), Some(split)).unwrap();
    CleanInputs {
        train: load(Split::Train),
        valid: load(Split::Valid),
        test: with_test.then(|| load(Split::Test)),
    }
}

pub fn golden_config() -> CleanConfig {
    CleanConfig {
        anchor: AnchorConfig::default(),
        scoring: ScoringConfig::default(),
        split_test: true,
        reproducible: true,
    }
}

pub fn sample(id: &str, old_code: &str, new_code: &str, old_comment: &str, new_comment: &str) -> Sample {
    Sample {
        id: id.into(),
        old_code: old_code.into(),
        new_code: new_code.into(),
        old_comment: old_comment.into(),
        new_comment: new_comment.into(),
        split: Split::Train,
        meta: Default::default(),
    }
}

pub const GOLDEN_FILES: [&str; 10] = [
    "scores.csv",
    "histogram.csv",
    "report.json",
    "rejects.jsonl",
    "train.cleaned.jsonl",
    "train.noisy.jsonl",
    "valid.cleaned.jsonl",
    "valid.noisy.jsonl",
    "test.cleaned.jsonl",
    "test.noisy.jsonl",
];

/// Names of output files whose bytes differ from the checked-in goldens.
pub fn golden_mismatches(out_dir: &Path) -> Vec<String> {
    let golden = golden_dir();
    GOLDEN_FILES
        .iter()
        .filter(|name| std::fs::read(out_dir.join(name)).ok() != std::fs::read(golden.join(name)).ok())
        .map(|name| name.to_string())
        .collect()
}
