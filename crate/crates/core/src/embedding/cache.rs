use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::{embed, Channel, EmbedError, EmbeddingProvider};

type Vector = Arc<[f32]>;

/// Content-addressed vector cache.
///
/// Keys are `(provider id, channel, sha256(text))`. The memory layer lives as
/// long as the cache value; the optional disk layer keeps one file per key,
/// holding the dimension as `u32` followed by little-endian `f32` values.
/// Every vector handed out is at `f32` precision whether or not it came from
/// a cache layer, so results do not depend on the cache configuration.
#[derive(Debug)]
pub struct EmbeddingCache {
    memory: Option<RwLock<HashMap<String, Vector>>>,
    dir: Option<PathBuf>,
    batch_size: usize,
    hits: AtomicUsize,
    misses: AtomicUsize,
    provider_texts: AtomicUsize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CacheStats {
    pub hits: usize,
    pub misses: usize,
    /// Texts forwarded to the provider.
    pub provider_texts: usize,
}

impl EmbeddingCache {
    pub const DEFAULT_BATCH: usize = 32;

    /// No reuse across calls.
    pub fn disabled() -> Self {
        Self::build(None, None)
    }

    pub fn in_memory() -> Self {
        Self::build(Some(RwLock::default()), None)
    }

    pub fn on_disk(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self::build(Some(RwLock::default()), Some(dir)))
    }

    fn build(memory: Option<RwLock<HashMap<String, Vector>>>, dir: Option<PathBuf>) -> Self {
        EmbeddingCache {
            memory,
            dir,
            batch_size: Self::DEFAULT_BATCH,
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
            provider_texts: AtomicUsize::new(0),
        }
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            provider_texts: self.provider_texts.load(Ordering::Relaxed),
        }
    }

    pub fn key(provider_id: &str, channel: Channel, text: &str) -> String {
        let text_hash = Sha256::digest(text.as_bytes());
        let mut h = Sha256::new();
        h.update(provider_id.as_bytes());
        h.update([0]);
        h.update(channel.as_str().as_bytes());
        h.update([0]);
        h.update(text_hash);
        hex::encode(h.finalize())
    }

    fn path_for(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.vec")))
    }

    fn lookup(&self, key: &str) -> Option<Vector> {
        if let Some(memory) = &self.memory {
            if let Some(v) = memory.read().expect("cache lock").get(key) {
                return Some(v.clone());
            }
        }
        let path = self.path_for(key)?;
        let bytes = match fs::read(&path) {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return None,
            Err(e) => {
                log::warn!("cache entry {} unreadable, treating as miss: {e}", path.display());
                return None;
            }
        };
        match decode_entry(&bytes) {
            Ok(values) => {
                let v: Vector = values.into();
                self.remember(key, v.clone());
                Some(v)
            }
            Err(reason) => {
                log::warn!("cache entry {} corrupt ({reason}), treating as miss", path.display());
                None
            }
        }
    }

    fn remember(&self, key: &str, v: Vector) {
        if let Some(memory) = &self.memory {
            memory.write().expect("cache lock").insert(key.to_string(), v);
        }
    }

    fn store(&self, key: &str, v: &Vector) {
        self.remember(key, v.clone());
        if let Some(path) = self.path_for(key) {
            // write-then-rename keeps concurrent readers from seeing a partial entry
            let tmp = path.with_extension(format!("tmp{}", std::process::id()));
            let written = fs::write(&tmp, encode_entry(v)).and_then(|()| fs::rename(&tmp, &path));
            if let Err(e) = written {
                log::warn!("could not persist cache entry {}: {e}", path.display());
                let _ = fs::remove_file(&tmp);
            }
        }
    }

    /// Single-text lookup through the cache.
    pub fn cached_embed(
        &self,
        text: &str,
        channel: Channel,
        provider: &dyn EmbeddingProvider,
    ) -> Result<Vector, EmbedError> {
        let mut out = self.embed_many(&[(channel, text)], provider);
        out.pop().expect("one result")
    }

    /// Resolves every `(channel, text)` request, in order.
    ///
    /// Misses are sent to the provider in batches. A batch the provider
    /// rejects is retried text by text so one bad input only fails itself.
    /// A transport failure (the provider already retried) stops all further
    /// requests in this call; if nothing had been embedded yet it becomes a
    /// systemic failure. Fatal errors fail every pending request.
    pub fn embed_many(
        &self,
        requests: &[(Channel, &str)],
        provider: &dyn EmbeddingProvider,
    ) -> Vec<Result<Vector, EmbedError>> {
        let provider_id = provider.id();
        let keys: Vec<String> = requests
            .par_iter()
            .map(|(channel, text)| Self::key(&provider_id, *channel, text))
            .collect();

        let mut results: Vec<Option<Result<Vector, EmbedError>>> = Vec::with_capacity(requests.len());
        let mut pending: HashMap<Channel, Vec<usize>> = HashMap::new();
        let mut first_for_key: HashMap<&str, usize> = HashMap::new();
        let mut duplicates = Vec::new();
        for (i, key) in keys.iter().enumerate() {
            match self.lookup(key) {
                Some(v) => {
                    self.hits.fetch_add(1, Ordering::Relaxed);
                    results.push(Some(Ok(v)));
                }
                None => {
                    results.push(None);
                    if let Some(&first) = first_for_key.get(key.as_str()) {
                        duplicates.push((i, first));
                    } else {
                        first_for_key.insert(key, i);
                        self.misses.fetch_add(1, Ordering::Relaxed);
                        pending.entry(requests[i].0).or_default().push(i);
                    }
                }
            }
        }

        let mut channels: Vec<_> = pending.into_iter().collect();
        channels.sort_by_key(|(c, _)| *c);
        let breaker = Breaker::default();
        for (channel, indices) in channels {
            let chunks: Vec<&[usize]> = indices.chunks(self.batch_size).collect();
            let fetched: Vec<Vec<(usize, Result<Vector, EmbedError>)>> = chunks
                .par_iter()
                .map(|chunk| match breaker.tripped() {
                    Some(e) => chunk.iter().map(|&i| (i, Err(e.clone()))).collect(),
                    None => self.fetch_chunk(chunk, channel, requests, provider, &breaker),
                })
                .collect();
            for (i, result) in fetched.into_iter().flatten() {
                if let Ok(v) = &result {
                    self.store(&keys[i], v);
                }
                results[i] = Some(result);
            }
        }
        for (i, first) in duplicates {
            results[i] = results[first].clone();
        }
        results
            .into_iter()
            .map(|r| r.expect("every request resolved"))
            .collect()
    }

    fn fetch_chunk(
        &self,
        chunk: &[usize],
        channel: Channel,
        requests: &[(Channel, &str)],
        provider: &dyn EmbeddingProvider,
        breaker: &Breaker,
    ) -> Vec<(usize, Result<Vector, EmbedError>)> {
        let texts: Vec<&str> = chunk.iter().map(|&i| requests[i].1).collect();
        self.provider_texts.fetch_add(texts.len(), Ordering::Relaxed);
        match embed(&texts, channel, provider) {
            Ok(vectors) => {
                breaker.delivered.store(true, Ordering::Relaxed);
                chunk
                    .iter()
                    .zip(vectors)
                    .map(|(&i, v)| (i, Ok(Vector::from(v.to_f32()))))
                    .collect()
            }
            Err(EmbedError::Rejected { .. }) if chunk.len() > 1 => {
                log::warn!(
                    "provider rejected a batch of {} texts; retrying one by one",
                    chunk.len()
                );
                chunk
                    .iter()
                    .flat_map(|i| self.fetch_chunk(std::slice::from_ref(i), channel, requests, provider, breaker))
                    .collect()
            }
            Err(EmbedError::Transport(msg)) => {
                let e = breaker.trip(msg);
                chunk.iter().map(|&i| (i, Err(e.clone()))).collect()
            }
            Err(e) => chunk.iter().map(|&i| (i, Err(e.clone()))).collect(),
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }
}

/// Stops talking to a provider once it is unreachable.
#[derive(Default)]
struct Breaker {
    delivered: AtomicBool,
    outage: Mutex<Option<EmbedError>>,
}

impl Breaker {
    fn tripped(&self) -> Option<EmbedError> {
        self.outage.lock().expect("breaker lock").clone()
    }

    fn trip(&self, msg: String) -> EmbedError {
        let mut outage = self.outage.lock().expect("breaker lock");
        outage
            .get_or_insert_with(|| {
                if self.delivered.load(Ordering::Relaxed) {
                    EmbedError::Transport(msg)
                } else {
                    EmbedError::Systemic(format!("provider unreachable: {msg}"))
                }
            })
            .clone()
    }
}

pub fn encode_entry(values: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 4 * values.len());
    out.extend_from_slice(&(values.len() as u32).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parses a cache file body; any structural problem is reported as a string.
pub fn decode_entry(bytes: &[u8]) -> Result<Vec<f32>, String> {
    let (header, body) = bytes
        .split_first_chunk::<4>()
        .ok_or_else(|| format!("entry too short ({} bytes)", bytes.len()))?;
    let dim = u32::from_le_bytes(*header) as usize;
    if dim == 0 {
        return Err("zero dimension".into());
    }
    if body.len() != dim.saturating_mul(4) {
        return Err(format!("dimension {dim} does not match {} payload bytes", body.len()));
    }
    let values: Vec<f32> = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err("non-finite component".into());
    }
    Ok(values)
}
