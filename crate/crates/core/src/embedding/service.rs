//! HTTP client for the embedding service.
//!
//! `POST /v1/embed` with `{"channel": ..., "texts": [...]}` answers
//! `{"dim": N, "vectors": [[...], ...]}` in request order; `GET /healthz`
//! answers `{"status": "ok", "channels": {"code_token": D1, "sentence": D2}}`.

use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::thread;
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::header::CONTENT_TYPE;
use serde::{Deserialize, Serialize};

use super::{Channel, EmbedError, EmbeddingProvider};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest<'a> {
    pub channel: Channel,
    #[serde(borrow)]
    pub texts: Vec<&'a str>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub dim: usize,
    pub vectors: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncated: Option<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub channels: BTreeMap<String, usize>,
}

impl Health {
    pub fn dim(&self, channel: Channel) -> Option<usize> {
        self.channels.get(channel.as_str()).copied()
    }
}

/// Validates an `/v1/embed` response body against the request size.
pub fn decode_embed_response(body: &[u8], expected: usize) -> Result<EmbedResponse, EmbedError> {
    let response: EmbedResponse =
        serde_json::from_slice(body).map_err(|e| EmbedError::Protocol(format!("bad embed response: {e}")))?;
    if response.vectors.len() != expected {
        return Err(EmbedError::Protocol(format!(
            "expected {expected} vectors, got {}",
            response.vectors.len()
        )));
    }
    if response.dim == 0 {
        return Err(EmbedError::Protocol("advertised dimension is 0".into()));
    }
    if let Some(v) = response.vectors.iter().find(|v| v.len() != response.dim) {
        return Err(EmbedError::Protocol(format!(
            "vector of length {} in a response of dim {}",
            v.len(),
            response.dim
        )));
    }
    Ok(response)
}

pub fn decode_health(body: &[u8]) -> Result<Health, EmbedError> {
    let health: Health =
        serde_json::from_slice(body).map_err(|e| EmbedError::Protocol(format!("bad health response: {e}")))?;
    if health.status != "ok" {
        return Err(EmbedError::Transport(format!("service unhealthy: {}", health.status)));
    }
    Ok(health)
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            initial_backoff: Duration::from_millis(200),
        }
    }
}

pub struct ServiceProvider {
    base_url: String,
    client: Client,
    batch_size: usize,
    retry: RetryPolicy,
    health: OnceLock<Health>,
}

impl ServiceProvider {
    pub fn new(base_url: &str) -> Result<Self, EmbedError> {
        let client = Client::builder()
            .timeout(Duration::from_secs(300))
            .build()
            .map_err(|e| EmbedError::Transport(e.to_string()))?;
        Ok(ServiceProvider {
            base_url: base_url.trim_end_matches('/').to_string(),
            client,
            batch_size: 32,
            retry: RetryPolicy::default(),
            health: OnceLock::new(),
        })
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn health(&self) -> Result<&Health, EmbedError> {
        if let Some(h) = self.health.get() {
            return Ok(h);
        }
        let url = format!("{}/healthz", self.base_url);
        let body = self.with_retries(|| {
            let resp = self.client.get(&url).send().map_err(transport)?;
            read_body(resp)
        })?;
        let health = decode_health(&body)?;
        Ok(self.health.get_or_init(|| health))
    }

    fn post_batch(&self, channel: Channel, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let url = format!("{}/v1/embed", self.base_url);
        let payload = serde_json::to_vec(&EmbedRequest {
            channel,
            texts: texts.to_vec(),
        })
        .expect("request serializes");
        let body = self.with_retries(|| {
            let resp = self
                .client
                .post(&url)
                .header(CONTENT_TYPE, "application/json")
                .body(payload.clone())
                .send()
                .map_err(transport)?;
            read_body(resp)
        })?;
        Ok(decode_embed_response(&body, texts.len())?.vectors)
    }

    fn with_retries<T>(&self, mut call: impl FnMut() -> Result<T, EmbedError>) -> Result<T, EmbedError> {
        let mut backoff = self.retry.initial_backoff;
        let mut attempt = 1;
        loop {
            match call() {
                Err(EmbedError::Transport(msg)) if attempt < self.retry.attempts => {
                    log::warn!("embedding service attempt {attempt} failed: {msg}; retrying");
                    thread::sleep(backoff);
                    backoff *= 2;
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

fn transport(e: reqwest::Error) -> EmbedError {
    EmbedError::Transport(e.to_string())
}

fn read_body(resp: reqwest::blocking::Response) -> Result<Vec<u8>, EmbedError> {
    let status = resp.status();
    let body = resp.bytes().map_err(transport)?.to_vec();
    if status.is_server_error() {
        return Err(EmbedError::Transport(format!("status {status}")));
    }
    if !status.is_success() {
        return Err(EmbedError::Rejected {
            status: status.as_u16(),
            message: String::from_utf8_lossy(&body).chars().take(200).collect(),
        });
    }
    Ok(body)
}

impl EmbeddingProvider for ServiceProvider {
    fn id(&self) -> String {
        format!("service:{}", self.base_url)
    }

    fn dim(&self, channel: Channel) -> Result<usize, EmbedError> {
        self.health()?
            .dim(channel)
            .ok_or_else(|| EmbedError::Protocol(format!("service does not advertise channel {channel}")))
    }

    fn embed_batch(&self, channel: Channel, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.batch_size) {
            out.extend(self.post_batch(channel, chunk)?);
        }
        Ok(out)
    }
}
