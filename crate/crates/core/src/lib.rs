//! Quality scoring and tail trimming for comment-updating datasets.
//!
//! Every sample (old code, new code, old comment, new comment) receives a
//! score in `[0, 1]` built from three channels: the semantic similarity of
//! the old/new pairs, the semantic similarity of the comment and code diffs,
//! and the character overlap between the changed words. The scores form a
//! distribution whose left tail is trimmed at an anchor found by sweeping a
//! cut point rightwards from `mu - 2 * delta`.
//!
//! The modules follow the data flow:
//!
//! * [`corpus`]: sample model and line-delimited JSON I/O.
//! * [`textdiff`]: tokenizer, word-level LCS diff and the overlap score.
//! * [`embedding`]: providers, cosine similarity and the vector cache.
//! * [`scoring`]: per-sample score breakdowns.
//! * [`anchor`]: distribution statistics and the anchor search.
//! * [`pipeline`] and [`report`]: orchestration, exports and rendering.

pub mod anchor;
pub mod corpus;
pub mod embedding;
mod error;
pub mod numeric;
pub mod pipeline;
pub mod report;
pub mod scoring;
pub mod textdiff;

pub use error::{Error, Result};
