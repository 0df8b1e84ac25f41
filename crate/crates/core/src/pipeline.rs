//! End-to-end cleaning: score, search the anchor on train+valid, split.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::anchor::{filter_by_anchor, histogram, search_anchor, AnchorConfig};
use crate::corpus::{write_dataset, write_records, Dataset, NoisyRecord, RejectRecord, Sample, Split};
use crate::embedding::{EmbeddingCache, EmbeddingProvider};
use crate::report::{
    write_histogram_csv, write_scores_csv, AnchorReport, CleanReport, ConfigEcho, SplitCounts, SplitReport, Status,
    Timing,
};
use crate::scoring::{score_dataset, ScoreBreakdown, ScoredSet, ScoringConfig};
use crate::{Error, Result};

pub const REASON_BELOW_ANCHOR: &str = "below_anchor";

#[derive(Debug, Clone, Default)]
pub struct CleanConfig {
    pub anchor: AnchorConfig,
    pub scoring: ScoringConfig,
    /// Partition the test split with the train+valid anchor.
    pub split_test: bool,
    /// Write zero timings so reruns produce byte-identical reports.
    pub reproducible: bool,
}

#[derive(Debug, Clone, Default)]
pub struct CleanInputs {
    pub train: Dataset,
    pub valid: Dataset,
    pub test: Option<Dataset>,
}

pub fn cleaned_path(out_dir: &Path, split: Split) -> PathBuf {
    out_dir.join(format!("{split}.cleaned.jsonl"))
}

pub fn noisy_path(out_dir: &Path, split: Split) -> PathBuf {
    out_dir.join(format!("{split}.noisy.jsonl"))
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

/// Runs the full cleaning pass and writes every output under `out_dir`.
///
/// On a systemic provider failure no split files are left behind; a
/// `report.json` with `status: failed` is written and the error returned.
pub fn clean(
    inputs: &CleanInputs,
    config: &CleanConfig,
    provider: &dyn EmbeddingProvider,
    cache: &EmbeddingCache,
    out_dir: &Path,
) -> Result<CleanReport> {
    let started = Instant::now();
    if inputs.train.is_empty() {
        return Err(Error::Input("training split has no samples".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let test = inputs.test.as_ref().filter(|_| config.split_test);
    let split_sets: Vec<(Split, &Dataset)> = [
        (Split::Train, Some(&inputs.train)),
        (Split::Valid, Some(&inputs.valid)),
        (Split::Test, test),
    ]
    .into_iter()
    .filter_map(|(s, d)| d.map(|d| (s, d)))
    .collect();
    for (split, _) in &split_sets {
        for out in [cleaned_path(out_dir, *split), noisy_path(out_dir, *split)] {
            let clobbers_input = [Some(&inputs.train), Some(&inputs.valid), inputs.test.as_ref()]
                .into_iter()
                .flatten()
                .any(|d| same_file(&out, Path::new(&d.source_path)));
            if clobbers_input {
                return Err(Error::Usage(format!(
                    "output {} would overwrite an input file",
                    out.display()
                )));
            }
        }
    }

    let mut report = CleanReport {
        status: Status::Ok,
        error: None,
        provider: provider.id(),
        config: ConfigEcho::new(&config.anchor, config.scoring.clamp, config.split_test),
        splits: SplitReport {
            train: SplitCounts {
                input: inputs.train.len(),
                ..SplitCounts::default()
            },
            valid: SplitCounts {
                input: inputs.valid.len(),
                ..SplitCounts::default()
            },
            test: test.map(|t| SplitCounts {
                input: t.len(),
                ..SplitCounts::default()
            }),
        },
        test_untouched: true,
        anchor: None,
        unscored: 0,
        rejects: 0,
        timing: Timing::default(),
    };

    let all: Vec<Sample> = split_sets.iter().flat_map(|(_, d)| d.samples.iter().cloned()).collect();
    let scored = match score_dataset(&all, provider, cache, config.scoring) {
        Ok(scored) => scored,
        Err(e) => return Err(fail(report, out_dir, &split_sets, e)),
    };

    let outcomes = scored.outcome(all.len());
    let search_len = inputs.train.len() + inputs.valid.len();
    let search_scores: Vec<f64> = outcomes[..search_len]
        .iter()
        .filter_map(|o| o.ok().map(|b| b.final_score))
        .collect();
    if search_scores.is_empty() {
        let e = Error::Input("no train/valid sample could be scored".into());
        return Err(fail(report, out_dir, &split_sets, e));
    }

    let anchor_started = Instant::now();
    let anchor = search_anchor(&search_scores, &config.anchor)?;
    let anchor_seconds = anchor_started.elapsed().as_secs_f64();
    let cut = anchor.selected.unwrap_or(f64::NEG_INFINITY);

    let mut offset = 0;
    for (split, dataset) in &split_sets {
        let range = offset..offset + dataset.len();
        offset = range.end;
        let counts = write_split(*split, &dataset.samples, &outcomes[range], cut, out_dir)?;
        match split {
            Split::Train => report.splits.train = counts,
            Split::Valid => report.splits.valid = counts,
            Split::Test => report.splits.test = Some(counts),
        }
    }

    write_scores_csv(&out_dir.join("scores.csv"), &scored.breakdowns)?;
    write_histogram_csv(&out_dir.join("histogram.csv"), &anchor.stats.histogram)?;
    let rejects: Vec<RejectRecord> = [
        (Split::Train, Some(&inputs.train)),
        (Split::Valid, Some(&inputs.valid)),
        (Split::Test, inputs.test.as_ref()),
    ]
    .into_iter()
    .filter_map(|(s, d)| d.map(|d| (s, d)))
    .flat_map(|(split, d)| {
        d.rejects.iter().map(move |r| RejectRecord {
            source: split.to_string(),
            line_no: r.line_no,
            reason: r.reason.clone(),
        })
    })
    .collect();
    report.rejects = write_records(&rejects, &out_dir.join("rejects.jsonl"))?;

    report.unscored = scored.unscored.len();
    report.anchor = Some(AnchorReport::from(&anchor));
    if !config.reproducible {
        report.timing = Timing {
            embed_seconds: scored.embed_seconds,
            score_seconds: scored.score_seconds,
            anchor_seconds,
            total_seconds: started.elapsed().as_secs_f64(),
        };
    }
    report.write(&out_dir.join("report.json"))?;
    Ok(report)
}

fn write_split(
    split: Split,
    samples: &[Sample],
    outcomes: &[std::result::Result<&ScoreBreakdown, &str>],
    cut: f64,
    out_dir: &Path,
) -> Result<SplitCounts> {
    let scored: Vec<(Sample, ScoreBreakdown)> = samples
        .iter()
        .zip(outcomes)
        .filter_map(|(s, o)| o.ok().map(|b| (s.clone(), b.clone())))
        .collect();
    let (scored_samples, breakdowns): (Vec<Sample>, Vec<ScoreBreakdown>) = scored.into_iter().unzip();
    let partition = filter_by_anchor(&scored_samples, &breakdowns, cut)?;

    let mut noisy = Vec::new();
    let mut removed = 0;
    let mut unscored = 0;
    for (sample, outcome) in samples.iter().zip(outcomes) {
        match outcome {
            Ok(b) if b.final_score < cut => {
                removed += 1;
                noisy.push(NoisyRecord {
                    sample,
                    reason: REASON_BELOW_ANCHOR,
                });
            }
            Ok(_) => {}
            Err(reason) => {
                unscored += 1;
                noisy.push(NoisyRecord { sample, reason });
            }
        }
    }
    debug_assert_eq!(removed, partition.removed.len());

    let kept = write_dataset(
        &partition.kept.into_iter().cloned().collect::<Vec<_>>(),
        &cleaned_path(out_dir, split),
    )?;
    write_records(&noisy, &noisy_path(out_dir, split))?;
    Ok(SplitCounts {
        input: samples.len(),
        kept,
        removed,
        unscored,
    })
}

fn fail(mut report: CleanReport, out_dir: &Path, split_sets: &[(Split, &Dataset)], error: Error) -> Error {
    for (split, _) in split_sets {
        for path in [cleaned_path(out_dir, *split), noisy_path(out_dir, *split)] {
            let _ = fs::remove_file(path);
        }
    }
    report.status = Status::Failed;
    report.error = Some(error.to_string());
    if let Err(write_err) = report.write(&out_dir.join("report.json")) {
        log::error!("could not write failure report: {write_err}");
    }
    error
}

#[derive(Debug, Clone)]
pub struct ScoreSummary {
    pub rows: usize,
    pub unscored: usize,
    pub embed_seconds: f64,
    pub score_seconds: f64,
    pub histogram: Vec<u64>,
    pub scored: ScoredSet,
}

/// Scores a dataset and writes `scores.csv` and `histogram.csv`; nothing is filtered.
pub fn score_only(
    dataset: &Dataset,
    scoring: ScoringConfig,
    provider: &dyn EmbeddingProvider,
    cache: &EmbeddingCache,
    out_dir: &Path,
) -> Result<ScoreSummary> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let scored = score_dataset(&dataset.samples, provider, cache, scoring)?;
    let rows = write_scores_csv(&out_dir.join("scores.csv"), &scored.breakdowns)?;
    let finals: Vec<f64> = scored.breakdowns.iter().map(|b| b.final_score).collect();
    let hist = histogram(&finals);
    write_histogram_csv(&out_dir.join("histogram.csv"), &hist)?;
    Ok(ScoreSummary {
        rows,
        unscored: scored.unscored.len(),
        embed_seconds: scored.embed_seconds,
        score_seconds: scored.score_seconds,
        histogram: hist,
        scored,
    })
}

/// Uniform random subsample, drawn independently within each split.
///
/// Each split keeps `round(rate * count)` samples chosen with a ChaCha8
/// stream seeded by `seed`; survivors stay in input order.
pub fn subsample(samples: &[Sample], rate: f64, seed: u64) -> Result<Vec<Sample>> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Usage(format!("subsample rate {rate} is outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; samples.len()];
    for split in Split::ALL {
        let members: Vec<usize> = (0..samples.len()).filter(|&i| samples[i].split == split).collect();
        let take = (rate * members.len() as f64).round() as usize;
        for pick in index::sample(&mut rng, members.len(), take.min(members.len())) {
            keep[members[pick]] = true;
        }
    }
    Ok(samples
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(s, _)| s.clone())
        .collect())
}
