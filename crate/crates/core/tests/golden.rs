mod common;

use std::fs;
use std::time::Instant;

use common::{fixture_inputs, golden_config, golden_dir, golden_mismatches};
use cupcleaner::anchor::SelectionRule;
use cupcleaner::embedding::{EmbeddingCache, HashEmbedder};
use cupcleaner::pipeline::clean;
use cupcleaner::report::CleanReport;

#[test]
fn synthetic_corpus_matches_goldens_byte_for_byte() {
    let out = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let report = clean(
        &fixture_inputs(true),
        &golden_config(),
        &HashEmbedder::new(),
        &EmbeddingCache::disabled(),
        out.path(),
    )
    .unwrap();
    assert!(started.elapsed().as_secs_f64() < 10.0);
    assert_eq!(golden_mismatches(out.path()), Vec::<String>::new());

    let anchor = report.anchor.as_ref().unwrap();
    assert_eq!(anchor.n, 85);
    assert_eq!(anchor.selection_rule, SelectionRule::Aggressive);
    assert_eq!(anchor.selected_threshold, Some(0.1));
}

#[test]
fn rerun_is_byte_identical_and_cache_transparent() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cache_dir = tempfile::tempdir().unwrap();
    let cache = EmbeddingCache::on_disk(cache_dir.path()).unwrap();
    let provider = HashEmbedder::new();
    clean(&fixture_inputs(true), &golden_config(), &provider, &cache, a.path()).unwrap();
    let cold = cache.stats();
    clean(&fixture_inputs(true), &golden_config(), &provider, &cache, b.path()).unwrap();
    let warm = cache.stats();
    assert_eq!(
        warm.provider_texts, cold.provider_texts,
        "warm run asked the provider again"
    );
    assert!(warm.hits > cold.hits);
    assert_eq!(golden_mismatches(a.path()), Vec::<String>::new());
    assert_eq!(golden_mismatches(b.path()), Vec::<String>::new());
}

#[test]
fn golden_report_parses_and_reconciles() {
    let report = CleanReport::read(&golden_dir().join("report.json")).unwrap();
    assert!(report.splits.train.reconciles());
    assert!(report.splits.valid.reconciles());
    assert!(report.splits.test.unwrap().reconciles());
    let text = fs::read_to_string(golden_dir().join("report.json")).unwrap();
    assert_eq!(report.to_json(), text);
}
