//! Anchor search over the score distribution.
//!
//! The sweep starts at `p_old = mu - lambda0 * delta` and moves the cut to
//! `p_new = mu - (lambda0 - x) * delta` for `x = 0.01, 0.02, ..., 2.01`. For
//! each area-change threshold `t = 0.01, ..., 0.10` the first `x` whose
//! area change (fraction of scores strictly below `p_new` minus the fraction
//! strictly below `p_old`) exceeds `t` yields a candidate anchor at `p_new`.
//! Selection is aggressive: the largest candidate anchor not above the cap.

use serde::{Deserialize, Serialize};

use crate::corpus::Sample;
use crate::numeric::exact_sum;
use crate::scoring::ScoreBreakdown;
use crate::{Error, Result};

pub const HISTOGRAM_BINS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionStats {
    pub mu: f64,
    /// Population standard deviation.
    pub delta: f64,
    pub n: usize,
    /// Counts per 0.01-wide bin over `[0, 1]`; the last bin includes 1.0.
    pub histogram: Vec<u64>,
}

/// Histogram with [`HISTOGRAM_BINS`] bins. Out-of-range values (possible
/// with clamping off) fall into the end bins.
pub fn histogram(scores: &[f64]) -> Vec<u64> {
    let mut bins = vec![0u64; HISTOGRAM_BINS];
    for &s in scores {
        let idx = (s * HISTOGRAM_BINS as f64).floor();
        let idx = if idx.is_nan() {
            0.0
        } else {
            idx.clamp(0.0, (HISTOGRAM_BINS - 1) as f64)
        };
        bins[idx as usize] += 1;
    }
    bins
}

pub fn distribution_stats(scores: &[f64]) -> Result<DistributionStats> {
    if scores.is_empty() {
        return Err(Error::Usage("distribution of an empty score list".into()));
    }
    let n = scores.len();
    let mu = exact_sum(scores.iter().copied()) / n as f64;
    let variance = exact_sum(scores.iter().map(|s| (s - mu) * (s - mu))) / n as f64;
    Ok(DistributionStats {
        mu,
        delta: variance.sqrt(),
        n,
        histogram: histogram(scores),
    })
}

/// Scores sorted ascending, for counting how many fall below a cut.
#[derive(Debug, Clone)]
pub struct SortedScores(Vec<f64>);

impl SortedScores {
    pub fn new(scores: &[f64]) -> Self {
        let mut v = scores.to_vec();
        v.sort_by(f64::total_cmp);
        SortedScores(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of scores strictly below `cut`.
    pub fn count_below(&self, cut: f64) -> usize {
        self.0.partition_point(|&s| s < cut)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaChange {
    pub r_c: f64,
    pub p_old: f64,
    pub p_new: f64,
}

pub fn area_changed(stats: &DistributionStats, scores: &SortedScores, lambda: f64, x: f64) -> AreaChange {
    let p_old = stats.mu - lambda * stats.delta;
    let p_new = stats.mu - (lambda - x) * stats.delta;
    let moved = scores.count_below(p_new) as i64 - scores.count_below(p_old) as i64;
    AreaChange {
        // a single division, equal to R_n - R_o without the rounding of a subtraction
        r_c: moved as f64 / scores.len() as f64,
        p_old,
        p_new,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorConfig {
    pub lambda0: f64,
    pub threshold_step: f64,
    pub threshold_count: u32,
    pub x_step: f64,
    pub x_count: u32,
    pub cap: f64,
    /// Record every crossing `x` instead of stopping at the first one.
    pub record_all_crossings: bool,
}

impl Default for AnchorConfig {
    fn default() -> Self {
        AnchorConfig {
            lambda0: 2.0,
            threshold_step: 0.01,
            threshold_count: 10,
            x_step: 0.01,
            x_count: 201,
            cap: 0.8,
            record_all_crossings: false,
        }
    }
}

impl AnchorConfig {
    pub fn thresholds(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.threshold_count).map(|k| k as f64 * self.threshold_step)
    }

    pub fn offsets(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.x_count).map(|i| i as f64 * self.x_step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorCandidate {
    pub threshold: f64,
    pub x: f64,
    pub anchor: f64,
    pub area_change: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// The highest-threshold candidate is within the cap.
    Aggressive,
    /// The highest-threshold candidate exceeded the cap; an earlier one was used.
    CapFallback,
    /// No usable candidate; cut at `mu - lambda0 * delta`.
    BaselineFallback,
    /// Nothing is filtered.
    DegenerateNone,
}

impl SelectionRule {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionRule::Aggressive => "aggressive",
            SelectionRule::CapFallback => "cap_fallback",
            SelectionRule::BaselineFallback => "baseline_fallback",
            SelectionRule::DegenerateNone => "degenerate_none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorResult {
    pub stats: DistributionStats,
    pub candidates: Vec<AnchorCandidate>,
    pub selected: Option<f64>,
    /// Threshold of the selected candidate, if the anchor came from one.
    pub selected_threshold: Option<f64>,
    pub selection_rule: SelectionRule,
    pub delete_rate: f64,
}

pub fn search_anchor(scores: &[f64], config: &AnchorConfig) -> Result<AnchorResult> {
    let stats = distribution_stats(scores)?;
    let sorted = SortedScores::new(scores);

    let mut candidates = Vec::new();
    for threshold in config.thresholds() {
        for x in config.offsets() {
            let change = area_changed(&stats, &sorted, config.lambda0, x);
            if change.r_c > threshold {
                candidates.push(AnchorCandidate {
                    threshold,
                    x,
                    anchor: change.p_new,
                    area_change: change.r_c,
                });
                if !config.record_all_crossings {
                    break;
                }
            }
        }
    }

    let mut selected = None;
    let mut selected_threshold = None;
    let mut rule = SelectionRule::DegenerateNone;
    if stats.delta > 0.0 {
        let within_cap = candidates
            .iter()
            .filter(|c| c.anchor <= config.cap)
            // ties go to the later (higher-threshold) candidate
            .fold(None, |best: Option<&AnchorCandidate>, c| match best {
                Some(b) if b.anchor > c.anchor => Some(b),
                _ => Some(c),
            });
        if let (Some(best), Some(last)) = (within_cap, candidates.last()) {
            selected = Some(best.anchor);
            selected_threshold = Some(best.threshold);
            rule = if last.anchor <= config.cap {
                SelectionRule::Aggressive
            } else {
                SelectionRule::CapFallback
            };
        }
    }
    if selected.is_none() && stats.delta > 0.0 {
        let baseline = stats.mu - config.lambda0 * stats.delta;
        if sorted.count_below(baseline) > 0 {
            selected = Some(baseline);
            rule = SelectionRule::BaselineFallback;
        }
    }

    let removed = selected.map_or(0, |cut| sorted.count_below(cut));
    Ok(AnchorResult {
        delete_rate: removed as f64 / stats.n as f64,
        stats,
        candidates,
        selected,
        selected_threshold,
        selection_rule: rule,
    })
}

#[derive(Debug)]
pub struct Partition<'a> {
    pub kept: Vec<&'a Sample>,
    pub removed: Vec<&'a Sample>,
}

/// Splits samples at `anchor`: strictly lower final scores are removed.
///
/// `breakdowns[i]` must belong to `samples[i]`.
pub fn filter_by_anchor<'a>(
    samples: &'a [Sample],
    breakdowns: &[ScoreBreakdown],
    anchor: f64,
) -> Result<Partition<'a>> {
    if samples.len() != breakdowns.len() {
        return Err(Error::Consistency(format!(
            "{} samples but {} score breakdowns",
            samples.len(),
            breakdowns.len()
        )));
    }
    let mut partition = Partition {
        kept: Vec::new(),
        removed: Vec::new(),
    };
    for (sample, b) in samples.iter().zip(breakdowns) {
        if sample.id != b.sample_id {
            return Err(Error::Consistency(format!(
                "no breakdown for sample {:?} (found {:?})",
                sample.id, b.sample_id
            )));
        }
        if b.final_score < anchor {
            partition.removed.push(sample);
        } else {
            partition.kept.push(sample);
        }
    }
    Ok(partition)
}
