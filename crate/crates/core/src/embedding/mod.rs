//! Semantic vectors behind a provider boundary.
//!
//! Providers turn texts into fixed-dimension vectors per [`Channel`]. The
//! offline [`HashEmbedder`] needs no model; [`ServiceProvider`] talks to the
//! embedding service over HTTP. [`EmbeddingCache`] sits in front of either
//! and hands out vectors at `f32` precision, the precision of the wire
//! protocol and of the on-disk cache.

mod cache;
mod hash;
mod service;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{decode_entry, encode_entry, CacheStats, EmbeddingCache};
pub use hash::HashEmbedder;
pub use service::{
    decode_embed_response, decode_health, EmbedRequest, EmbedResponse, Health, RetryPolicy, ServiceProvider,
};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// Token-level encoder, used for comments, code and diffs.
    CodeToken,
    /// Sentence encoder, used for comments only.
    Sentence,
}

impl Channel {
    pub fn as_str(self) -> &'static str {
        match self {
            Channel::CodeToken => "code_token",
            Channel::Sentence => "sentence",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "code_token" => Ok(Channel::CodeToken),
            "sentence" => Ok(Channel::Sentence),
            other => Err(format!("unknown channel {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    pub channel: Channel,
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn zero(channel: Channel, dim: usize) -> Self {
        EmbeddingVector {
            channel,
            values: vec![0.0; dim],
        }
    }

    pub fn norm(&self) -> f64 {
        let mut sq = 0.0;
        for v in &self.values {
            sq += v * v;
        }
        sq.sqrt()
    }

    /// Values rounded to `f32`, the precision vectors are scored at.
    pub fn to_f32(&self) -> Vec<f32> {
        self.values.iter().map(|&v| v as f32).collect()
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EmbedError {
    /// Network-level failure; retried before being surfaced.
    #[error("transport error: {0}")]
    Transport(String),
    /// The provider answered but refused the request.
    #[error("provider rejected request (status {status}): {message}")]
    Rejected { status: u16, message: String },
    /// The response violates the wire contract.
    #[error("protocol error: {0}")]
    Protocol(String),
    /// The provider could not embed anything at all.
    #[error("systemic provider failure: {0}")]
    Systemic(String),
}

impl EmbedError {
    /// Errors that poison the whole run instead of a single sample.
    pub fn is_fatal(&self) -> bool {
        matches!(self, EmbedError::Protocol(_) | EmbedError::Systemic(_))
    }
}

pub trait EmbeddingProvider: Send + Sync {
    /// Stable identifier, part of every cache key.
    fn id(&self) -> String;

    fn dim(&self, channel: Channel) -> Result<usize, EmbedError>;

    /// Embeds non-empty texts, one vector per text in request order.
    fn embed_batch(&self, channel: Channel, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbedError>;
}

/// One vector per text, in order. Empty texts map to the zero vector.
pub fn embed(
    texts: &[&str],
    channel: Channel,
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<EmbeddingVector>, EmbedError> {
    let non_empty: Vec<&str> = texts.iter().copied().filter(|t| !t.is_empty()).collect();
    let mut vectors = if non_empty.is_empty() {
        Vec::new()
    } else {
        provider.embed_batch(channel, &non_empty)?
    };
    if vectors.len() != non_empty.len() {
        return Err(EmbedError::Protocol(format!(
            "asked for {} vectors, got {}",
            non_empty.len(),
            vectors.len()
        )));
    }
    let dim = match vectors.first() {
        Some(v) => v.len(),
        None if texts.is_empty() => return Ok(Vec::new()),
        None => provider.dim(channel)?,
    };
    if dim == 0 {
        return Err(EmbedError::Protocol("zero-dimension vectors".into()));
    }
    if let Some(bad) = vectors.iter().find(|v| v.len() != dim) {
        return Err(EmbedError::Protocol(format!(
            "dimension mismatch within batch: {dim} vs {}",
            bad.len()
        )));
    }
    if vectors.iter().flatten().any(|v| !v.is_finite()) {
        return Err(EmbedError::Protocol("non-finite vector component".into()));
    }

    let mut drained = vectors.drain(..);
    Ok(texts
        .iter()
        .map(|text| {
            if text.is_empty() {
                EmbeddingVector::zero(channel, dim)
            } else {
                EmbeddingVector {
                    channel,
                    values: drained.next().expect("one vector per non-empty text"),
                }
            }
        })
        .collect())
}

/// Cosine similarity; zero when either vector has zero norm.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Usage(format!(
            "cosine of vectors with different dimensions ({} vs {})",
            a.dim(),
            b.dim()
        )));
    }
    Ok(cosine_slices(&a.values, &b.values))
}

/// Cosine over raw slices, accumulated in `f64` front to back.
pub fn cosine_slices<T: Copy + Into<f64>>(a: &[T], b: &[T]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut dot = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        dot += x.into() * y.into();
    }
    let norm_a = sum_squares(a).sqrt();
    let norm_b = sum_squares(b).sqrt();
    if norm_a == 0.0 || norm_b == 0.0 {
        return 0.0;
    }
    dot / (norm_a * norm_b)
}

fn sum_squares<T: Copy + Into<f64>>(v: &[T]) -> f64 {
    let mut sq = 0.0;
    for &x in v {
        let x: f64 = x.into();
        sq += x * x;
    }
    sq
}
