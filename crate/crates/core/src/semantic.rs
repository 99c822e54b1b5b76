//! Pluggable text encoders behind one interface.
//!
//! - `hashing_mock`: deterministic signed bag-of-words feature hashing,
//!   L2-normalized. Dependency-free and sufficient for synthetic corpora
//!   whose dialogue text embeds attribute names verbatim.
//! - `file_table`: precomputed vectors keyed by the sha256 of the text,
//!   for plugging in real PLM embeddings computed offline.
//! - `http_endpoint`: an embeddings HTTP API (OpenAI-compatible shape).

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{BackendError, Error, Result};
use crate::linalg::l2_norm;

pub const HASHING_MOCK_DIM: usize = 256;

#[derive(Debug, Clone)]
pub enum SemanticEncoder {
    /// Signed feature hashing over lowercase alphanumeric tokens.
    HashingMock { dim_s: usize },
    /// Lookup table keyed by content hash (hex sha256 of the text).
    FileTable { dim_s: usize, table: HashMap<String, Vec<f64>> },
    /// Remote embeddings endpoint.
    HttpEndpoint {
        dim_s: usize,
        base_url: String,
        model: String,
        api_key: Option<String>,
        timeout: Duration,
    },
}

impl SemanticEncoder {
    pub fn hashing_mock() -> Self {
        SemanticEncoder::HashingMock { dim_s: HASHING_MOCK_DIM }
    }

    pub fn dim_s(&self) -> usize {
        match self {
            SemanticEncoder::HashingMock { dim_s } => *dim_s,
            SemanticEncoder::FileTable { dim_s, .. } => *dim_s,
            SemanticEncoder::HttpEndpoint { dim_s, .. } => *dim_s,
        }
    }

    /// Encodes text into a finite vector of width `dim_s`. Deterministic for
    /// fixed input and encoder kind.
    pub fn encode(&self, text: &str) -> Result<Vec<f64>> {
        match self {
            SemanticEncoder::HashingMock { dim_s } => Ok(hash_encode(text, *dim_s)),
            SemanticEncoder::FileTable { dim_s, table } => {
                let key = content_key(text);
                let v = table.get(&key).ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "file_table encoder has no vector for content key {key} (text starts {:?})",
                        text.chars().take(32).collect::<String>()
                    ))
                })?;
                debug_assert_eq!(v.len(), *dim_s);
                Ok(v.clone())
            }
            SemanticEncoder::HttpEndpoint {
                dim_s,
                base_url,
                model,
                api_key,
                timeout,
            } => {
                let v = http_embed(base_url, model, api_key.as_deref(), *timeout, text)?;
                if v.len() != *dim_s {
                    return Err(Error::ShapeMismatch(format!(
                        "endpoint returned width {}, expected {dim_s}",
                        v.len()
                    )));
                }
                Ok(v)
            }
        }
    }
}

/// Hex sha256 of the text; the key format of `file_table` encoders.
pub fn content_key(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    let mut s = String::with_capacity(64);
    for b in digest {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// Lowercase alphanumeric token runs.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            tokens.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    tokens
}

/// FNV-1a, fixed here so hashing is stable across platforms and releases.
fn fnv1a(token: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in token.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn hash_encode(text: &str, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    for token in tokenize(text) {
        let h = fnv1a(&token);
        let bucket = (h % dim as u64) as usize;
        let sign = if (h >> 63) & 1 == 0 { 1.0 } else { -1.0 };
        v[bucket] += sign;
    }
    let norm = l2_norm(&v);
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    v
}

// ---------------------------------------------------------------------------
// File table IO: JSONL of {"key": str, "vector": [float]}
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TableRecord {
    key: String,
    vector: Vec<f64>,
}

pub fn load_file_table(path: &Path) -> Result<SemanticEncoder> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut table = HashMap::new();
    let mut dim = 0usize;
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TableRecord = serde_json::from_str(&line)
            .map_err(|e| Error::malformed(path, idx + 1, e.to_string()))?;
        if dim == 0 {
            dim = rec.vector.len();
        } else if rec.vector.len() != dim {
            return Err(Error::malformed(
                path,
                idx + 1,
                format!("inconsistent vector width {} vs {}", rec.vector.len(), dim),
            ));
        }
        table.insert(rec.key, rec.vector);
    }
    if table.is_empty() {
        return Err(Error::InvalidInput(format!("empty file table {}", path.display())));
    }
    Ok(SemanticEncoder::FileTable { dim_s: dim, table })
}

// ---------------------------------------------------------------------------
// HTTP embeddings
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct EmbedRequest<'a> {
    model: &'a str,
    input: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    data: Vec<EmbedDatum>,
}

#[derive(Deserialize)]
struct EmbedDatum {
    embedding: Vec<f64>,
}

fn http_embed(
    base_url: &str,
    model: &str,
    api_key: Option<&str>,
    timeout: Duration,
    text: &str,
) -> Result<Vec<f64>> {
    let client = reqwest::blocking::Client::builder()
        .timeout(timeout)
        .build()
        .map_err(|e| BackendError::Transport(e.to_string()))?;
    let url = format!("{}/embeddings", base_url.trim_end_matches('/'));
    let mut req = client.post(&url).json(&EmbedRequest { model, input: text });
    if let Some(key) = api_key {
        req = req.bearer_auth(key);
    }
    let resp = req.send().map_err(|e| {
        if e.is_timeout() {
            BackendError::Timeout(timeout)
        } else {
            BackendError::Transport(e.to_string())
        }
    })?;
    if !resp.status().is_success() {
        return Err(BackendError::BadResponse(format!("status {}", resp.status())).into());
    }
    let parsed: EmbedResponse = resp
        .json()
        .map_err(|e| BackendError::BadResponse(e.to_string()))?;
    parsed
        .data
        .into_iter()
        .next()
        .map(|d| d.embedding)
        .ok_or_else(|| BackendError::BadResponse("empty data array".into()).into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cosine, dot};

    #[test]
    fn tokenizer_splits_on_non_alphanumeric() {
        assert_eq!(tokenize("Hi! genre03, Movie 0042"), vec!["hi", "genre03", "movie", "0042"]);
        assert!(tokenize("...").is_empty());
    }

    #[test]
    fn hashing_encoder_is_deterministic_and_normalized() {
        let enc = SemanticEncoder::hashing_mock();
        let a = enc.encode("comedy drama movie").unwrap();
        let b = enc.encode("comedy drama movie").unwrap();
        assert_eq!(a, b);
        assert!((dot(&a, &a) - 1.0).abs() < 1e-12);
        assert_eq!(a.len(), HASHING_MOCK_DIM);
    }

    #[test]
    fn empty_text_is_zero_vector() {
        let enc = SemanticEncoder::hashing_mock();
        let v = enc.encode("!!!").unwrap();
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn shared_tokens_raise_similarity() {
        let enc = SemanticEncoder::hashing_mock();
        let a = enc.encode("comedy drama thriller").unwrap();
        let b = enc.encode("comedy drama romance").unwrap();
        let c = enc.encode("western noir silent").unwrap();
        assert!(cosine(&a, &b) > cosine(&a, &c));
    }

    #[test]
    fn file_table_round_trip() {
        let dir = tempfile::TempDir::new().unwrap();
        let path = dir.path().join("table.jsonl");
        let key = content_key("hello");
        std::fs::write(&path, format!("{{\"key\":\"{key}\",\"vector\":[1.0,2.0]}}\n")).unwrap();
        let enc = load_file_table(&path).unwrap();
        assert_eq!(enc.encode("hello").unwrap(), vec![1.0, 2.0]);
        assert!(enc.encode("other").is_err());
    }
}
