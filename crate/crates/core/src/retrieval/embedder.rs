//! Text-query embedding backends.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::http::{HttpError, JsonClient, RetryPolicy};

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("query {0:?} has no precomputed embedding")]
    TableMiss(String),
    #[error("embedding for query {index} has zero or non-finite norm")]
    Degenerate { index: usize },
    #[error("embedding response: {0}")]
    BadResponse(String),
    #[error(transparent)]
    Http(#[from] HttpError),
    #[error("query table {path}: {reason}")]
    Table { path: String, reason: String },
}

/// Maps query strings to vectors. Callers normalize the output.
pub trait TextEmbedder: Send + Sync {
    fn embed(&self, queries: &[String]) -> Result<Vec<Vec<f32>>, EmbedError>;
}

/// Scales `v` to unit L2 norm.
pub fn normalize(mut v: Vec<f32>) -> Option<Vec<f32>> {
    let norm = v
        .iter()
        .map(|&x| f64::from(x) * f64::from(x))
        .sum::<f64>()
        .sqrt();
    if !norm.is_finite() || norm == 0.0 {
        return None;
    }
    for x in &mut v {
        *x = (f64::from(*x) / norm) as f32;
    }
    Some(v)
}

/// Deterministic embedder for offline runs: the query text seeds a ChaCha
/// stream whose draws form the vector.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
    seed: u64,
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self { dim, seed }
    }

    pub fn vector(&self, query: &str) -> Vec<f32> {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(query.as_bytes());
        let digest: [u8; 32] = hasher.finalize().into();
        let mut rng = ChaCha8Rng::from_seed(digest);
        let raw = (0..self.dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        // an all-zero draw is practically impossible; fall back to a basis vector
        normalize(raw).unwrap_or_else(|| {
            let mut e = vec![0.0; self.dim];
            e[0] = 1.0;
            e
        })
    }
}

impl TextEmbedder for HashEmbedder {
    fn embed(&self, queries: &[String]) -> Result<Vec<Vec<f32>>, EmbedError> {
        Ok(queries.iter().map(|q| self.vector(q)).collect())
    }
}

/// Precomputed query embeddings, e.g. exported from the same contrastive
/// model that produced the frame features.
#[derive(Debug, Clone, Default)]
pub struct TableEmbedder {
    table: HashMap<String, Vec<f32>>,
}

impl TableEmbedder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query: impl Into<String>, vector: Vec<f32>) {
        self.table.insert(query.into(), vector);
    }

    /// Reads a JSON object mapping query text to an array of floats.
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, EmbedError> {
        let path = path.as_ref();
        let err = |reason: String| EmbedError::Table {
            path: path.display().to_string(),
            reason,
        };
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let table: HashMap<String, Vec<f32>> =
            serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        Ok(Self { table })
    }
}

impl FromIterator<(String, Vec<f32>)> for TableEmbedder {
    fn from_iter<I: IntoIterator<Item = (String, Vec<f32>)>>(iter: I) -> Self {
        Self {
            table: iter.into_iter().collect(),
        }
    }
}

impl TextEmbedder for TableEmbedder {
    fn embed(&self, queries: &[String]) -> Result<Vec<Vec<f32>>, EmbedError> {
        queries
            .iter()
            .map(|q| {
                self.table
                    .get(q)
                    .cloned()
                    .ok_or_else(|| EmbedError::TableMiss(q.clone()))
            })
            .collect()
    }
}

/// `POST {"input": [...]}` → `{"embeddings": [[...], ...]}` in input order.
#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    url: String,
    client: JsonClient,
}

impl HttpEmbedder {
    pub fn new(url: impl Into<String>, policy: RetryPolicy) -> Result<Self, EmbedError> {
        Ok(Self {
            url: url.into(),
            client: JsonClient::new(None, policy)?,
        })
    }
}

impl TextEmbedder for HttpEmbedder {
    fn embed(&self, queries: &[String]) -> Result<Vec<Vec<f32>>, EmbedError> {
        if queries.is_empty() {
            return Ok(Vec::new());
        }
        let (resp, _) = self.client.post(&self.url, &json!({ "input": queries }))?;
        let rows = resp
            .get("embeddings")
            .and_then(Value::as_array)
            .ok_or_else(|| EmbedError::BadResponse("missing \"embeddings\" array".into()))?;
        if rows.len() != queries.len() {
            return Err(EmbedError::BadResponse(format!(
                "{} rows for {} queries",
                rows.len(),
                queries.len()
            )));
        }
        rows.iter()
            .map(|row| {
                serde_json::from_value::<Vec<f32>>(row.clone())
                    .map_err(|e| EmbedError::BadResponse(e.to_string()))
            })
            .collect()
    }
}
