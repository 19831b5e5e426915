//! Sentence embeddings by averaging word vectors, cosine similarity, and a
//! nearest-neighbour index over capability sentences.

mod index;

use std::collections::HashMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use index::{index_corpus, rank_candidates, rank_top, EmbeddedCorpus, EmbeddedEntry};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbeddingError {
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("line {line}: expected {expected} components, found {found}")]
    Dimension { line: usize, expected: usize, found: usize },
    #[error("input has no tokens")]
    EmptyInput,
    #[error("vector dimensions differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("index is empty")]
    EmptyIndex,
    #[error("io: {0}")]
    Io(String),
}

/// Lowercases and splits on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    pub known_token_count: usize,
}

impl EmbeddingVector {
    pub fn zeros(dimension: usize) -> Self {
        EmbeddingVector {
            values: vec![0.0; dimension],
            known_token_count: 0,
        }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        EmbeddingVector {
            values,
            known_token_count: 1,
        }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Anything that maps a sentence to a fixed-length vector.
pub trait SentenceEncoder: Send + Sync {
    fn name(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError>;
    /// Vector of a single vocabulary word, when the encoder has one.
    fn word_vector(&self, _token: &str) -> Option<&[f64]> {
        None
    }
}

/// Word-vector table; sentences embed as the mean of their known tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    name: String,
    dimension: usize,
    vocab: HashMap<String, Vec<f64>>,
}

impl EmbeddingModel {
    pub fn new(name: impl Into<String>, vocab: HashMap<String, Vec<f64>>) -> Result<Self, EmbeddingError> {
        let mut dims = vocab.values().map(Vec::len);
        let dimension = dims.next().ok_or(EmbeddingError::Format {
            line: 0,
            reason: "vocabulary is empty".into(),
        })?;
        if dimension == 0 {
            return Err(EmbeddingError::Format {
                line: 0,
                reason: "vectors have no components".into(),
            });
        }
        if let Some(found) = dims.find(|d| *d != dimension) {
            return Err(EmbeddingError::Dimension {
                line: 0,
                expected: dimension,
                found,
            });
        }
        Ok(EmbeddingModel {
            name: name.into(),
            dimension,
            vocab,
        })
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab.len()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vocab.get(token).map(Vec::as_slice)
    }

    pub fn embed_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> EmbeddingVector {
        let mut sum = vec![0.0; self.dimension];
        let mut known = 0usize;
        for token in tokens {
            if let Some(v) = self.vocab.get(token.as_ref()) {
                known += 1;
                for (acc, x) in sum.iter_mut().zip(v) {
                    *acc += x;
                }
            }
        }
        if known > 0 {
            let n = known as f64;
            sum.iter_mut().for_each(|v| *v /= n);
        }
        EmbeddingVector {
            values: sum,
            known_token_count: known,
        }
    }
}

impl SentenceEncoder for EmbeddingModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError> {
        embed_sentence(self, text)
    }

    fn word_vector(&self, token: &str) -> Option<&[f64]> {
        self.get(token)
    }
}

/// Reads `token v1 .. vd` rows, with an optional `N d` header line.
/// Duplicate tokens keep the last row.
pub fn load_word_vectors(name: &str, source: impl BufRead) -> Result<EmbeddingModel, EmbeddingError> {
    let mut vocab: HashMap<String, Vec<f64>> = HashMap::new();
    let mut dimension: Option<usize> = None;
    for (i, line) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| EmbeddingError::Io(e.to_string()))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if i == 0 && fields.len() == 2 && fields.iter().all(|f| f.parse::<u64>().is_ok()) {
            let d: usize = fields[1].parse().unwrap();
            if d == 0 {
                return Err(EmbeddingError::Format {
                    line: 1,
                    reason: "header declares zero dimensions".into(),
                });
            }
            dimension = Some(d);
            continue;
        }
        if fields.len() < 2 {
            return Err(EmbeddingError::Format {
                line: line_no,
                reason: format!("row for `{}` has no components", fields[0]),
            });
        }
        let values = fields[1..]
            .iter()
            .map(|f| {
                f.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| EmbeddingError::Format {
                    line: line_no,
                    reason: format!("`{f}` is not a finite number"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        match dimension {
            None => dimension = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(EmbeddingError::Dimension {
                    line: line_no,
                    expected: d,
                    found: values.len(),
                })
            }
            Some(_) => {}
        }
        vocab.insert(fields[0].to_lowercase(), values);
    }
    EmbeddingModel::new(name, vocab)
}

/// Mean of the vectors of the known tokens in `text`; the zero vector when
/// none are known.
pub fn embed_sentence(model: &EmbeddingModel, text: &str) -> Result<EmbeddingVector, EmbeddingError> {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(EmbeddingError::EmptyInput);
    }
    Ok(model.embed_tokens(&tokens))
}

pub fn cosine_slices(a: &[f64], b: &[f64]) -> Result<f64, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::DimensionMismatch(a.len(), b.len()));
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Cosine of the angle between two vectors; 0 when either has zero norm.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbeddingError> {
    cosine_slices(&a.values, &b.values)
}
