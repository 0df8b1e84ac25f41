use super::{Channel, EmbedError, EmbeddingProvider};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Offline embedder: signed feature hashing of character 1..3-grams.
///
/// Each n-gram is hashed with FNV-1a (64 bit), seeded by the channel name
/// and a NUL byte. The low byte picks the bucket, the top bit the sign. The
/// result is L2-normalised; texts whose buckets cancel out map to the zero
/// vector. Texts sharing substrings get higher cosine similarity.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
}

impl HashEmbedder {
    pub const ID: &'static str = "hash-ngram-v1";
    pub const DIM: usize = 256;

    pub fn new() -> Self {
        HashEmbedder { dim: Self::DIM }
    }

    pub fn vector(&self, text: &str, channel: Channel) -> Vec<f64> {
        let mut values = vec![0.0f64; self.dim];
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let seed = fnv1a(FNV_OFFSET, channel.as_str().as_bytes());
        let seed = fnv1a(seed, &[0]);
        for n in 1..=3 {
            for start in 0..chars.len().saturating_sub(n - 1) {
                let from = chars[start].0;
                let to = chars.get(start + n).map_or(text.len(), |&(i, _)| i);
                let h = fnv1a(seed, &text.as_bytes()[from..to]);
                let bucket = (h & 0xff) as usize % self.dim;
                values[bucket] += if h >> 63 == 1 { -1.0 } else { 1.0 };
            }
        }
        let mut sq = 0.0;
        for v in &values {
            sq += v * v;
        }
        let norm = sq.sqrt();
        if norm == 0.0 {
            return vec![0.0; self.dim];
        }
        values.iter().map(|v| v / norm).collect()
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self::new()
    }
}

fn fnv1a(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

impl EmbeddingProvider for HashEmbedder {
    fn id(&self) -> String {
        Self::ID.to_string()
    }

    fn dim(&self, _channel: Channel) -> Result<usize, EmbedError> {
        Ok(self.dim)
    }

    fn embed_batch(&self, channel: Channel, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbedError> {
        Ok(texts.iter().map(|t| self.vector(t, channel)).collect())
    }
}
