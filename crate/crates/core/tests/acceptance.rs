//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs with `cargo test -p cupcleaner-core --test acceptance`. The
//! informational reproduction on real data runs only when both
//! `CUPCLEANER_REAL_DATA` (a directory with `train.jsonl` and
//! `valid.jsonl`) and `CUPCLEANER_SERVICE_URL` are set.

mod common;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use common::oracle::{brute_lcs, dp_lcs, random_sample, random_string, random_tokens};
use common::{fixture_inputs, golden_config, golden_mismatches};
use cupcleaner::anchor::{area_changed, distribution_stats, search_anchor, AnchorConfig, SortedScores};
use cupcleaner::corpus::{load_dataset, Sample, Split};
use cupcleaner::embedding::{EmbeddingCache, HashEmbedder, ServiceProvider};
use cupcleaner::pipeline::{clean, CleanConfig, CleanInputs};
use cupcleaner::scoring::{score_dataset, score_sample, ScoringConfig};
use cupcleaner::textdiff::{lcs_len, word_diff, TextKind, TokenSeq};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Outcome::{Fail, Pass, Skip};

/// Name, check, and whether a failure fails the suite.
type Criterion = (&'static str, fn() -> Outcome, bool);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn lcs_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let alphabet = ['a', 'b', 'c', 'd', 'e', 'f'];
    let pairs: Vec<(String, String)> = (0..1000)
        .map(|_| {
            let size = rng.gen_range(1..=alphabet.len());
            (
                random_string(&mut rng, 12, &alphabet[..size]),
                random_string(&mut rng, 12, &alphabet[..size]),
            )
        })
        .collect();
    let started = Instant::now();
    let fast: Vec<usize> = pairs.iter().map(|(a, b)| lcs_len(a, b)).collect();
    let seconds = started.elapsed().as_secs_f64();
    let mismatches = pairs
        .iter()
        .zip(&fast)
        .filter(|((a, b), l)| brute_lcs(a, b) != **l)
        .count();
    check(
        mismatches == 0 && seconds < 5.0,
        format!("1000 pairs, {mismatches} mismatches, {seconds:.3} s"),
    )
}

fn diff_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let vocab = ["int", "x", "=", ";", "(", ")", "return", "y", "a_b"];
    let mut bad = 0;
    for _ in 0..500 {
        let old = random_tokens(&mut rng, 20, &vocab);
        let new = random_tokens(&mut rng, 20, &vocab);
        let l = dp_lcs(&old, &new);
        let d = word_diff(
            &TokenSeq {
                tokens: old.clone(),
                kind: TextKind::Code,
            },
            &TokenSeq {
                tokens: new.clone(),
                kind: TextKind::Code,
            },
        );
        if d.changed_old.len() != old.len() - l || d.changed_new.len() != new.len() - l {
            bad += 1;
        }
    }
    check(bad == 0, format!("500 pairs, {bad} count mismatches"))
}

fn score_range() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let provider = HashEmbedder::new();
    let cache = EmbeddingCache::disabled();
    let mut bad = Vec::new();
    for i in 0..1000 {
        let s = random_sample(&mut rng, i);
        let b = score_sample(&s, &provider, &cache, true).unwrap();
        let in_range = b.values().iter().all(|v| (0.0..=1.0).contains(v));
        let algebra = b.s1 <= b.c_token.min(b.c_sent).min(b.s_token)
            && b.s2 <= b.d
            && b.s3 <= b.o
            && b.final_score == b.s1.max(b.s2).max(b.s3);
        if !(in_range && algebra) {
            bad.push(b.sample_id);
        }
    }
    check(
        bad.is_empty(),
        format!(
            "1000 samples, {} violations {:?}",
            bad.len(),
            bad.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn identity_dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let provider = HashEmbedder::new();
    let cache = EmbeddingCache::disabled();
    let mut worst: f64 = 0.0;
    let mut tried = 0;
    while tried < 500 {
        let mut s = random_sample(&mut rng, tried);
        if s.old_code.is_empty() || s.old_comment.is_empty() {
            continue;
        }
        s.new_code = s.old_code.clone();
        s.new_comment = s.old_comment.clone();
        let b = score_sample(&s, &provider, &cache, true).unwrap();
        worst = worst.max((b.final_score - 1.0).abs());
        tried += 1;
    }
    check(
        worst <= 1e-9,
        format!("500 unchanged samples, max |final - 1| = {worst:e}"),
    )
}

fn anchor_analytic() -> Outcome {
    let scores: Vec<f64> = [vec![0.3; 20], vec![0.9; 80]].concat();
    let r = search_anchor(&scores, &AnchorConfig::default()).unwrap();
    let selected = r.selected.unwrap_or(f64::NAN);
    let ok = r.stats.mu == 0.78
        && (r.stats.delta - 0.24).abs() <= 1e-15
        && (selected - 0.3024).abs() <= 1e-12
        && r.delete_rate == 0.2;
    check(
        ok,
        format!(
            "mu {} delta {} anchor {selected} delete rate {}",
            r.stats.mu, r.stats.delta, r.delete_rate
        ),
    )
}

fn anchor_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let config = AnchorConfig::default();
    let mut failures = Vec::new();
    for trial in 0..200 {
        // a mix of shapes: uniform, skewed high, and bimodal
        let scores: Vec<f64> = (0..1000)
            .map(|_| match trial % 3 {
                0 => rng.gen::<f64>(),
                1 => 1.0 - rng.gen::<f64>().powi(3),
                _ if rng.gen_bool(0.2) => rng.gen_range(0.0..0.4),
                _ => rng.gen_range(0.7..=1.0),
            })
            .collect();
        let stats = distribution_stats(&scores).unwrap();
        let sorted = SortedScores::new(&scores);
        let r_c: Vec<f64> = config
            .offsets()
            .map(|x| area_changed(&stats, &sorted, config.lambda0, x).r_c)
            .collect();
        if !r_c.windows(2).all(|w| w[0] <= w[1]) {
            failures.push(format!("trial {trial}: r_c decreases"));
        }
        let a = search_anchor(&scores, &config).unwrap();
        if !a.candidates.windows(2).all(|w| w[0].anchor <= w[1].anchor) {
            failures.push(format!("trial {trial}: candidates decrease"));
        }
        let mut shuffled = scores.clone();
        shuffled.shuffle(&mut rng);
        let b = search_anchor(&shuffled, &config).unwrap();
        let bits = |r: &cupcleaner::anchor::AnchorResult| {
            (
                r.stats.mu.to_bits(),
                r.stats.delta.to_bits(),
                r.selected.map(f64::to_bits),
                r.candidates.iter().map(|c| c.anchor.to_bits()).collect::<Vec<_>>(),
            )
        };
        if bits(&a) != bits(&b) {
            failures.push(format!("trial {trial}: permutation changed the result"));
        }
    }
    check(
        failures.is_empty(),
        format!(
            "200 multisets of 1000, {} failures {:?}",
            failures.len(),
            failures.first()
        ),
    )
}

fn golden_end_to_end() -> Outcome {
    let out = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let result = clean(
        &fixture_inputs(true),
        &golden_config(),
        &HashEmbedder::new(),
        &EmbeddingCache::disabled(),
        out.path(),
    );
    let seconds = started.elapsed().as_secs_f64();
    if let Err(e) = result {
        return Fail(format!("pipeline error: {e}"));
    }
    let mismatches = golden_mismatches(out.path());
    check(
        mismatches.is_empty() && seconds < 10.0,
        format!(
            "{} files compared, mismatches {mismatches:?}, {seconds:.2} s",
            common::GOLDEN_FILES.len()
        ),
    )
}

/// 100k samples drawn from a pool of 2,000 synthetic ones; the pool is
/// embedded up front so the timed part is scoring plus anchor search.
fn throughput() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let pool: Vec<Sample> = (0..2000).map(|i| random_sample(&mut rng, i)).collect();
    let samples: Vec<Sample> = (0..100_000)
        .map(|i| Sample {
            id: format!("t{i}"),
            ..pool[i % pool.len()].clone()
        })
        .collect();
    let provider = HashEmbedder::new();
    let cache = EmbeddingCache::in_memory();
    let scoring = ScoringConfig {
        clamp: true,
        workers: 1,
    };
    score_dataset(&pool, &provider, &cache, scoring).unwrap();

    let started = Instant::now();
    let scored = score_dataset(&samples, &provider, &cache, scoring).unwrap();
    let finals: Vec<f64> = scored.breakdowns.iter().map(|b| b.final_score).collect();
    let anchor_started = Instant::now();
    let anchor = search_anchor(&finals, &AnchorConfig::default()).unwrap();
    let anchor_seconds = anchor_started.elapsed().as_secs_f64();
    let seconds = started.elapsed().as_secs_f64();

    // the report carries the timing fields for a real run
    let out = tempfile::tempdir().unwrap();
    let mut config = golden_config();
    config.reproducible = false;
    let report = clean(&fixture_inputs(false), &config, &provider, &cache, out.path()).unwrap();
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    let fields = ["embed_seconds", "score_seconds", "anchor_seconds"];
    let has_fields = fields.iter().all(|f| json["timing"][f].is_f64());

    check(
        seconds < 60.0 && has_fields && scored.breakdowns.len() == 100_000 && anchor.stats.n == 100_000,
        format!(
            "100000 samples in {seconds:.2} s (embed {:.2}, score {:.2}, anchor {anchor_seconds:.3}), timing fields {}",
            scored.embed_seconds,
            scored.score_seconds,
            if has_fields { "present" } else { "missing" }
        ),
    )
}

fn real_data_reproduction() -> Outcome {
    let (Some(data), Ok(url)) = (
        std::env::var_os("CUPCLEANER_REAL_DATA"),
        std::env::var("CUPCLEANER_SERVICE_URL"),
    ) else {
        return Skip("set CUPCLEANER_REAL_DATA and CUPCLEANER_SERVICE_URL to run".into());
    };
    let data = PathBuf::from(data);
    let load = |split: Split| load_dataset(&data.join(format!("{split}.jsonl")), Some(split));
    let inputs = match (load(Split::Train), load(Split::Valid)) {
        (Ok(train), Ok(valid)) => CleanInputs {
            train,
            valid,
            test: None,
        },
        (Err(e), _) | (_, Err(e)) => return Fail(format!("cannot load data: {e}")),
    };
    let provider = match ServiceProvider::new(&url) {
        Ok(p) => p,
        Err(e) => return Fail(e.to_string()),
    };
    let out = tempfile::tempdir().unwrap();
    let config = CleanConfig {
        scoring: ScoringConfig {
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            ..ScoringConfig::default()
        },
        ..CleanConfig::default()
    };
    let report = match clean(&inputs, &config, &provider, &EmbeddingCache::disabled(), out.path()) {
        Ok(r) => r,
        Err(e) => return Fail(e.to_string()),
    };
    let a = report.anchor.unwrap();
    let threshold = a.selected_threshold.unwrap_or(f64::NAN);
    let anchor = a.selected.unwrap_or(f64::NAN);
    let ok = (threshold - 0.04).abs() <= 0.01 + 1e-12
        && (anchor - 0.7836).abs() <= 0.03
        && (a.delete_rate - 0.327).abs() <= 0.05;
    check(
        ok,
        format!(
            "threshold {threshold:.2} anchor {anchor:.4} delete rate {:.1}%",
            a.delete_rate * 100.0
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("lcs oracle equivalence", lcs_oracle, true),
        ("diff oracle equivalence", diff_oracle, true),
        ("score range and channel algebra", score_range, true),
        ("identity dominance", identity_dominance, true),
        ("anchor analytic case", anchor_analytic, true),
        (
            "anchor monotonicity and permutation invariance",
            anchor_monotonicity,
            true,
        ),
        ("golden end-to-end", golden_end_to_end, true),
        ("throughput and timing fields", throughput, true),
        ("real-data reproduction (informational)", real_data_reproduction, false),
    ];
    let mut failed = 0;
    for (name, run, gating) in criteria {
        match run() {
            Pass(detail) => println!("PASS  {name}: {detail}"),
            Skip(detail) => println!("SKIP  {name}: {detail}"),
            Fail(detail) => {
                println!("FAIL  {name}: {detail}");
                if gating {
                    failed += 1;
                }
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} gating criteria failed");
        ExitCode::FAILURE
    }
}
