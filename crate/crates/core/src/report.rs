//! Report structures, CSV exports and the text summary.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::anchor::{AnchorCandidate, AnchorConfig, AnchorResult, SelectionRule, HISTOGRAM_BINS};
use crate::numeric::format_significant;
use crate::scoring::ScoreBreakdown;
use crate::{Error, Result};

pub const SCORES_HEADER: [&str; 10] = [
    "id", "c_token", "c_sent", "s_token", "s1", "d", "s2", "o", "s3", "final",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitCounts {
    pub input: usize,
    pub kept: usize,
    pub removed: usize,
    pub unscored: usize,
}

impl SplitCounts {
    pub fn reconciles(&self) -> bool {
        self.input == self.kept + self.removed + self.unscored
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SplitReport {
    pub train: SplitCounts,
    pub valid: SplitCounts,
    pub test: Option<SplitCounts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub lambda0: f64,
    pub threshold_step: f64,
    pub threshold_count: u32,
    pub x_step: f64,
    pub x_count: u32,
    pub cap: f64,
    pub record_all_crossings: bool,
    pub clamp: bool,
    pub split_test: bool,
}

impl ConfigEcho {
    pub fn new(anchor: &AnchorConfig, clamp: bool, split_test: bool) -> Self {
        ConfigEcho {
            lambda0: anchor.lambda0,
            threshold_step: anchor.threshold_step,
            threshold_count: anchor.threshold_count,
            x_step: anchor.x_step,
            x_count: anchor.x_count,
            cap: anchor.cap,
            record_all_crossings: anchor.record_all_crossings,
            clamp,
            split_test,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorReport {
    pub mu: f64,
    pub delta: f64,
    pub n: usize,
    pub candidates: Vec<AnchorCandidate>,
    pub selected: Option<f64>,
    pub selected_threshold: Option<f64>,
    pub selection_rule: SelectionRule,
    pub delete_rate: f64,
}

impl From<&AnchorResult> for AnchorReport {
    fn from(r: &AnchorResult) -> Self {
        AnchorReport {
            mu: r.stats.mu,
            delta: r.stats.delta,
            n: r.stats.n,
            candidates: r.candidates.clone(),
            selected: r.selected,
            selected_threshold: r.selected_threshold,
            selection_rule: r.selection_rule,
            delete_rate: r.delete_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    pub embed_seconds: f64,
    pub score_seconds: f64,
    pub anchor_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanReport {
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub provider: String,
    pub config: ConfigEcho,
    pub splits: SplitReport,
    /// The test input file is never rewritten.
    pub test_untouched: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<AnchorReport>,
    pub unscored: usize,
    pub rejects: usize,
    pub timing: Timing,
}

impl CleanReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| Error::Input(format!("unreadable report: {e}")))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&bytes)
    }
}

pub fn write_scores_csv<'a>(path: &Path, breakdowns: impl IntoIterator<Item = &'a ScoreBreakdown>) -> Result<usize> {
    let io_err = |e: csv::Error| Error::io(path, e.into());
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(io_err)?;
    w.write_record(SCORES_HEADER).map_err(io_err)?;
    let mut rows = 0;
    for b in breakdowns {
        let mut record = Vec::with_capacity(SCORES_HEADER.len());
        record.push(b.sample_id.clone());
        record.extend(b.values().iter().map(|v| format_significant(*v, 9)));
        w.write_record(&record).map_err(io_err)?;
        rows += 1;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(rows)
}

pub fn write_histogram_csv(path: &Path, histogram: &[u64]) -> Result<()> {
    debug_assert_eq!(histogram.len(), HISTOGRAM_BINS);
    let mut out = String::from("bin_start,count\n");
    for (i, count) in histogram.iter().enumerate() {
        let _ = writeln!(out, "{}.{:02},{count}", i / 100, i % 100);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Text summary: a dataset-statistics table followed by a timing block.
pub fn report_render(report: &CleanReport) -> String {
    let mut out = String::new();
    if report.status == Status::Failed {
        let _ = writeln!(
            out,
            "cleaning FAILED: {}",
            report.error.as_deref().unwrap_or("unknown error")
        );
    }
    let _ = writeln!(out, "provider {}", report.provider);
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<8} {:>9} {:>9} {:>9} {:>9}",
        "split", "input", "kept", "removed", "unscored"
    );
    let splits = [
        ("train", Some(report.splits.train)),
        ("valid", Some(report.splits.valid)),
        ("test", report.splits.test),
    ];
    for (name, counts) in splits {
        match counts {
            Some(c) => {
                let _ = writeln!(
                    out,
                    "{name:<8} {:>9} {:>9} {:>9} {:>9}",
                    c.input, c.kept, c.removed, c.unscored
                );
            }
            None => {
                let _ = writeln!(out, "{name:<8} untouched (not split)");
            }
        }
    }
    let _ = writeln!(out);

    match &report.anchor {
        Some(a) => {
            let threshold = a.selected_threshold.map_or("-".to_string(), |t| format!("{t:.2}"));
            match a.selected {
                Some(anchor) if a.selection_rule != SelectionRule::DegenerateNone => {
                    let _ = writeln!(
                        out,
                        "threshold {threshold}  anchor {anchor:.4}  delete rate {:.1}%  ({})",
                        a.delete_rate * 100.0,
                        a.selection_rule.as_str()
                    );
                }
                _ => {
                    let _ = writeln!(out, "no filtering applied ({})", a.selection_rule.as_str());
                }
            }
            let _ = writeln!(
                out,
                "scores: n {}  mean {:.4}  std {:.4}  candidates {}",
                a.n,
                a.mu,
                a.delta,
                a.candidates.len()
            );
        }
        None => {
            let _ = writeln!(out, "no anchor searched");
        }
    }
    let _ = writeln!(out);

    let t = &report.timing;
    let _ = writeln!(out, "timing (total {:.2} s)", t.total_seconds);
    let _ = writeln!(out, "  {:<24} {:>10.2} s", "compute semantics", t.embed_seconds);
    let _ = writeln!(out, "  {:<24} {:>10.2} s", "compute scores", t.score_seconds);
    let _ = writeln!(out, "  {:<24} {:>10.2} s", "search anchor", t.anchor_seconds);
    out
}
