use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::SummarizeError;
use crate::remote::{JsonClient, RemoteFailure};
use crate::text::tokenize_normalize;

/// Per-token contextual embeddings of one text, one row per token.
pub type TokenMatrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceEmbedding {
    pub vector: Vec<f64>,
    /// Number of token vectors pooled.
    pub n: usize,
}

/// Mean of the token vectors: `h = (e_1 + ... + e_n) / n`.
pub fn embed_sentence(tokens: &[Vec<f64>]) -> Result<SentenceEmbedding, SummarizeError> {
    let first = tokens.first().ok_or(SummarizeError::NoTokens)?;
    let d = first.len();
    let mut sum = vec![0.0; d];
    for e in tokens {
        if e.len() != d {
            return Err(SummarizeError::DimensionMismatch {
                expected: d,
                got: e.len(),
            });
        }
        for (s, v) in sum.iter_mut().zip(e) {
            *s += v;
        }
    }
    let n = tokens.len();
    Ok(SentenceEmbedding {
        vector: sum.into_iter().map(|s| s / n as f64).collect(),
        n,
    })
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Produces one token-embedding matrix per input text.
pub trait EmbeddingBackend: Send + Sync {
    fn embed(&self, texts: &[String]) -> Result<Vec<TokenMatrix>, SummarizeError>;
}

/// Deterministic stand-in for a contextual encoder: each token gets a
/// feature-hashed vector, then every position averages its ±1-token window.
#[derive(Debug, Clone, Copy)]
pub struct HashEmbedder {
    pub dim: usize,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self { dim: 64 }
    }
}

impl HashEmbedder {
    fn token_vector(&self, token: &str) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim);
        let mut block = 0u32;
        while out.len() < self.dim {
            let mut h = Sha256::new();
            h.update(block.to_le_bytes());
            h.update(token.as_bytes());
            for byte in h.finalize().iter() {
                for nibble in [byte >> 4, byte & 0x0f] {
                    if out.len() < self.dim {
                        out.push((nibble as f64 - 7.5) / 7.5);
                    }
                }
            }
            block += 1;
        }
        out
    }

    pub fn embed_text(&self, text: &str) -> Result<TokenMatrix, SummarizeError> {
        let raw: Vec<Vec<f64>> = tokenize_normalize(text).iter().map(|t| self.token_vector(t)).collect();
        if raw.is_empty() {
            return Err(SummarizeError::EmptyText);
        }
        let n = raw.len();
        Ok((0..n)
            .map(|i| {
                let lo = i.saturating_sub(1);
                let hi = (i + 1).min(n - 1);
                let width = (hi - lo + 1) as f64;
                (0..self.dim)
                    .map(|d| raw[lo..=hi].iter().map(|v| v[d]).sum::<f64>() / width)
                    .collect()
            })
            .collect())
    }
}

impl EmbeddingBackend for HashEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<TokenMatrix>, SummarizeError> {
        texts.iter().map(|t| self.embed_text(t)).collect()
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    matrices: Vec<TokenMatrix>,
}

/// Client for an encoder served over `POST /embed`.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    client: JsonClient,
}

impl RemoteEmbedder {
    pub fn new(endpoint: &str, timeout: Duration) -> Self {
        Self {
            client: JsonClient::new(endpoint, "/embed", timeout),
        }
    }
}

impl EmbeddingBackend for RemoteEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<TokenMatrix>, SummarizeError> {
        if texts.iter().any(|t| t.trim().is_empty()) {
            return Err(SummarizeError::EmptyText);
        }
        let resp: EmbedResponse = self.client.post(&EmbedRequest { texts }).map_err(|f| match f {
            RemoteFailure::Unavailable(m) => SummarizeError::Unavailable(m),
            RemoteFailure::Protocol(m) => SummarizeError::Protocol(m),
        })?;
        if resp.matrices.len() != texts.len() {
            return Err(SummarizeError::Protocol(format!(
                "expected {} matrices, got {}",
                texts.len(),
                resp.matrices.len()
            )));
        }
        Ok(resp.matrices)
    }
}
