//! Document embedding vectors and cosine distance.
//!
//! Vectors are produced by an external model and ingested from
//! `vectors.jsonl`. [`embed_fallback`] is a deterministic bag-of-words signed
//! random projection used when no model output is available.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusIndex;
use crate::error::{Error, Result};

/// Unit-norm dense embedding of one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocVector {
    pub doc_id: String,
    pub values: Vec<f64>,
}

impl DocVector {
    /// Normalise `values` to unit L2 norm.
    pub fn new(doc_id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("empty vector"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite vector component"));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::invalid("zero vector cannot be normalised"));
        }
        Ok(Self {
            doc_id: doc_id.into(),
            values: values.into_iter().map(|v| v / norm).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// `1 - <u, v>` for unit vectors, clamped to `[0, 2]`.
pub fn cosine_distance(u: &DocVector, v: &DocVector) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimMismatch {
            expected: u.dim(),
            got: v.dim(),
        });
    }
    Ok(unit_distance(&u.values, &v.values))
}

pub(crate) fn unit_distance(u: &[f64], v: &[f64]) -> f64 {
    if u == v {
        return 0.0;
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    (1.0 - dot).clamp(0.0, 2.0)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Coverage {
    pub with_vector: usize,
    pub without_vector: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VectorStore {
    dim: usize,
    vectors: BTreeMap<String, DocVector>,
}

impl VectorStore {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(&mut self, v: DocVector) -> Result<()> {
        if self.vectors.is_empty() && self.dim == 0 {
            self.dim = v.dim();
        }
        if v.dim() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: v.dim(),
            });
        }
        if self.vectors.contains_key(&v.doc_id) {
            return Err(Error::Duplicate(v.doc_id));
        }
        self.vectors.insert(v.doc_id.clone(), v);
        Ok(())
    }

    pub fn get(&self, doc_id: &str) -> Option<&DocVector> {
        self.vectors.get(doc_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &DocVector> {
        self.vectors.values()
    }

    pub fn coverage(&self, index: &CorpusIndex) -> Coverage {
        let with_vector = index
            .docs()
            .filter(|d| self.vectors.contains_key(&d.doc_id))
            .count();
        Coverage {
            with_vector,
            without_vector: index.len() - with_vector,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::corpus::write_jsonl(path, self.vectors.values())
    }
}

#[derive(Deserialize)]
struct RawVector {
    doc_id: String,
    values: Vec<f64>,
}

/// Load `vectors.jsonl`, re-normalising every vector on the way in.
pub fn load_vectors(path: &Path) -> Result<VectorStore> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut store = VectorStore::new(0);
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let raw: RawVector = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let v = DocVector::new(raw.doc_id, raw.values).map_err(|e| parse_err(e.to_string()))?;
        store.insert(v).map_err(|e| parse_err(e.to_string()))?;
    }
    Ok(store)
}

/// Lowercase alphanumeric tokens of `text`.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn fnv1a(bytes: &[u8], seed: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic signed random projection of the token counts of `text`.
pub fn embed_fallback(doc_id: &str, text: &str, dim: usize, seed: u64) -> Result<DocVector> {
    if dim < 8 {
        return Err(Error::invalid(format!(
            "fallback embedder needs dim >= 8, got {dim}"
        )));
    }
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(Error::EmptyText);
    }
    let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
    for t in &tokens {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    let mut acc = vec![0i64; dim];
    for (tok, n) in counts {
        let mut state = fnv1a(tok.as_bytes(), seed);
        let mut bits = 0u64;
        for (k, slot) in acc.iter_mut().enumerate() {
            if k % 64 == 0 {
                bits = splitmix(&mut state);
            }
            let sign = if (bits >> (k % 64)) & 1 == 1 { 1 } else { -1 };
            *slot += sign * i64::from(n);
        }
    }
    let values = acc.into_iter().map(|v| v as f64).collect();
    DocVector::new(doc_id, values).map_err(|_| Error::EmptyText)
}

/// Embed every document of `index` from its title and abstract.
pub fn embed_corpus(index: &CorpusIndex, dim: usize, seed: u64) -> Result<VectorStore> {
    let mut store = VectorStore::new(dim);
    for doc in index.docs() {
        let text = format!("{} {}", doc.title, doc.abstract_text);
        match embed_fallback(&doc.doc_id, &text, dim, seed) {
            Ok(v) => store.insert(v)?,
            Err(Error::EmptyText) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(store)
}
