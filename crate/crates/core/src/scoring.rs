//! Per-sample quality scores.
//!
//! Three channels feed the final score:
//!
//! * `s1 = c_token * c_sent * s_token`: old/new similarity of the comment
//!   (token and sentence encoders) and of the code.
//! * `s2 = d * max(c_token, s_token)`: similarity between the comment diff
//!   and the code diff embeddings.
//! * `s3 = o * max(c_token, s_token)`: character overlap between the changed
//!   comment words and the changed code words.
//!
//! The final score is `max(s1, s2, s3)`. With clamping on (the default) each
//! cosine is clipped to `[0, 1]` before any product.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Sample;
use crate::embedding::{cosine_slices, Channel, EmbedError, EmbeddingCache, EmbeddingProvider};
use crate::textdiff::{overlap_score, tokenize, word_diff, TextKind};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub sample_id: String,
    pub c_token: f64,
    pub c_sent: f64,
    pub s_token: f64,
    pub s1: f64,
    pub d: f64,
    pub s2: f64,
    pub o: f64,
    pub s3: f64,
    #[serde(rename = "final")]
    pub final_score: f64,
}

impl ScoreBreakdown {
    /// Combines the five base similarities into the channel scores.
    pub fn from_parts(sample_id: impl Into<String>, c_token: f64, c_sent: f64, s_token: f64, d: f64, o: f64) -> Self {
        let s1 = c_token * c_sent * s_token;
        let best_pair = c_token.max(s_token);
        let s2 = d * best_pair;
        let s3 = o * best_pair;
        ScoreBreakdown {
            sample_id: sample_id.into(),
            c_token,
            c_sent,
            s_token,
            s1,
            d,
            s2,
            o,
            s3,
            final_score: s1.max(s2).max(s3),
        }
    }

    /// Field values in `scores.csv` column order.
    pub fn values(&self) -> [f64; 9] {
        [
            self.c_token,
            self.c_sent,
            self.s_token,
            self.s1,
            self.d,
            self.s2,
            self.o,
            self.s3,
            self.final_score,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoringConfig {
    pub clamp: bool,
    pub workers: usize,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            clamp: true,
            workers: 1,
        }
    }
}

fn similarity(a: &[f32], b: &[f32], clamp: bool) -> Result<f64, EmbedError> {
    if a.len() != b.len() {
        return Err(EmbedError::Protocol(format!(
            "vectors of dimension {} and {} in one comparison",
            a.len(),
            b.len()
        )));
    }
    let cos = cosine_slices(a, b);
    Ok(if clamp { cos.clamp(0.0, 1.0) } else { cos })
}

/// Text-side work that needs no embeddings.
struct Prepared {
    comment_diff: String,
    code_diff: String,
    overlap: f64,
}

fn prepare(sample: &Sample) -> Prepared {
    let dc = word_diff(
        &tokenize(&sample.old_comment, TextKind::Comment),
        &tokenize(&sample.new_comment, TextKind::Comment),
    );
    let ds = word_diff(
        &tokenize(&sample.old_code, TextKind::Code),
        &tokenize(&sample.new_code, TextKind::Code),
    );
    Prepared {
        comment_diff: dc.joined(),
        code_diff: ds.joined(),
        overlap: overlap_score(&dc.combined, &ds.combined),
    }
}

/// The eight texts a sample needs, as (channel, text) pairs in a fixed order:
/// comment pair (token), comment pair (sentence), code pair, diff pair.
fn requests<'a>(sample: &'a Sample, prepared: &'a Prepared) -> [(Channel, &'a str); 8] {
    [
        (Channel::CodeToken, sample.old_comment.as_str()),
        (Channel::CodeToken, sample.new_comment.as_str()),
        (Channel::Sentence, sample.old_comment.as_str()),
        (Channel::Sentence, sample.new_comment.as_str()),
        (Channel::CodeToken, sample.old_code.as_str()),
        (Channel::CodeToken, sample.new_code.as_str()),
        (Channel::CodeToken, prepared.comment_diff.as_str()),
        (Channel::CodeToken, prepared.code_diff.as_str()),
    ]
}

fn combine(id: &str, v: [&[f32]; 8], overlap: f64, clamp: bool) -> Result<ScoreBreakdown, EmbedError> {
    let c_token = similarity(v[0], v[1], clamp)?;
    let c_sent = similarity(v[2], v[3], clamp)?;
    let s_token = similarity(v[4], v[5], clamp)?;
    let d = similarity(v[6], v[7], clamp)?;
    Ok(ScoreBreakdown::from_parts(id, c_token, c_sent, s_token, d, overlap))
}

pub fn score_sample(
    sample: &Sample,
    provider: &dyn EmbeddingProvider,
    cache: &EmbeddingCache,
    clamp: bool,
) -> Result<ScoreBreakdown, EmbedError> {
    let prepared = prepare(sample);
    let resolved = cache.embed_many(&requests(sample, &prepared), provider);
    let mut vectors = Vec::with_capacity(8);
    for r in resolved {
        vectors.push(r?);
    }
    let v: [&[f32]; 8] = std::array::from_fn(|k| &*vectors[k]);
    combine(&sample.id, v, prepared.overlap, clamp)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unscored {
    pub index: usize,
    pub sample_id: String,
    pub reason: String,
}

/// Scores for a list of samples, in input order.
#[derive(Debug, Clone, Default)]
pub struct ScoredSet {
    /// One breakdown per scorable sample.
    pub breakdowns: Vec<ScoreBreakdown>,
    /// Input position of each breakdown.
    pub positions: Vec<usize>,
    pub unscored: Vec<Unscored>,
    pub embed_seconds: f64,
    pub score_seconds: f64,
}

impl ScoredSet {
    /// Per-input outcome: `Ok(breakdown)` or `Err(reason)`.
    pub fn outcome(&self, len: usize) -> Vec<std::result::Result<&ScoreBreakdown, &str>> {
        let mut out: Vec<std::result::Result<&ScoreBreakdown, &str>> = vec![Err("missing"); len];
        for (b, &pos) in self.breakdowns.iter().zip(&self.positions) {
            out[pos] = Ok(b);
        }
        for u in &self.unscored {
            out[u.index] = Err(&u.reason);
        }
        out
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {workers} workers: {e}")))
}

/// Scores every sample. Per-sample embedding failures land in
/// [`ScoredSet::unscored`]; the call fails only when the provider is broken
/// as a whole (protocol violations or nothing embeddable at all).
pub fn score_dataset(
    samples: &[Sample],
    provider: &dyn EmbeddingProvider,
    cache: &EmbeddingCache,
    config: ScoringConfig,
) -> Result<ScoredSet> {
    let pool = pool(config.workers)?;
    pool.install(|| score_in_pool(samples, provider, cache, config.clamp))
}

fn score_in_pool(
    samples: &[Sample],
    provider: &dyn EmbeddingProvider,
    cache: &EmbeddingCache,
    clamp: bool,
) -> Result<ScoredSet> {
    let started = Instant::now();
    let prepared: Vec<Prepared> = samples.par_iter().map(prepare).collect();

    let mut slot_of: HashMap<(Channel, &str), usize> = HashMap::new();
    let mut unique: Vec<(Channel, &str)> = Vec::new();
    let sample_slots: Vec<[usize; 8]> = samples
        .iter()
        .zip(&prepared)
        .map(|(sample, prep)| {
            requests(sample, prep).map(|req| {
                *slot_of.entry(req).or_insert_with(|| {
                    unique.push(req);
                    unique.len() - 1
                })
            })
        })
        .collect();
    let prepare_seconds = started.elapsed().as_secs_f64();

    let embed_started = Instant::now();
    let resolved: Vec<std::result::Result<Arc<[f32]>, EmbedError>> = cache.embed_many(&unique, provider);
    let embed_seconds = embed_started.elapsed().as_secs_f64();

    if let Some(fatal) = resolved.iter().find_map(|r| r.as_ref().err().filter(|e| e.is_fatal())) {
        return Err(fatal.clone().into());
    }
    // empty texts never reach the provider, so they do not count as successes
    let mut real = unique.iter().zip(&resolved).filter(|((_, text), _)| !text.is_empty());
    if let Some((_, Err(first))) = real.next() {
        if real.all(|(_, r)| r.is_err()) {
            return Err(EmbedError::Systemic(format!("no text could be embedded; first error: {first}")).into());
        }
    }

    let combine_started = Instant::now();
    let outcomes: Vec<std::result::Result<ScoreBreakdown, EmbedError>> = samples
        .par_iter()
        .zip(&prepared)
        .zip(&sample_slots)
        .map(|((sample, prep), slots)| {
            let mut vectors: Vec<&[f32]> = Vec::with_capacity(8);
            for &slot in slots {
                match &resolved[slot] {
                    Ok(v) => vectors.push(v),
                    Err(e) => return Err(e.clone()),
                }
            }
            let v: [&[f32]; 8] = vectors.try_into().expect("eight vectors");
            combine(&sample.id, v, prep.overlap, clamp)
        })
        .collect();

    let mut set = ScoredSet {
        embed_seconds,
        ..ScoredSet::default()
    };
    for (index, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(b) => {
                set.breakdowns.push(b);
                set.positions.push(index);
            }
            Err(e) if e.is_fatal() => return Err(e.into()),
            Err(e) => set.unscored.push(Unscored {
                index,
                sample_id: samples[index].id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    set.score_seconds = prepare_seconds + combine_started.elapsed().as_secs_f64();
    Ok(set)
}
