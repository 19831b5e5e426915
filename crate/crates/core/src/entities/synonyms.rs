use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::EntityKind;
use crate::embedding::{cosine_slices, SentenceEncoder};

const DEFAULT_TABLE: &str = include_str!("../../data/synonyms.txt");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynonymError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
}

/// Entity kind → nouns an argument description may use for it, closest first.
#[derive(Clone)]
pub struct SynonymTable {
    entries: BTreeMap<EntityKind, Vec<String>>,
    fallback: Option<(Arc<dyn SentenceEncoder>, f64)>,
}

impl fmt::Debug for SynonymTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SynonymTable")
            .field("entries", &self.entries)
            .field("fallback_threshold", &self.fallback.as_ref().map(|(_, t)| *t))
            .finish()
    }
}

impl Default for SynonymTable {
    fn default() -> Self {
        SynonymTable::parse(DEFAULT_TABLE).expect("built-in synonym table parses")
    }
}

impl SynonymTable {
    /// Parses `KIND: noun1, noun2, ...` lines.
    pub fn parse(text: &str) -> Result<Self, SynonymError> {
        let mut entries: BTreeMap<EntityKind, Vec<String>> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: String| SynonymError::Syntax { line: i + 1, reason };
            let (kind, nouns) = line.split_once(':').ok_or_else(|| err("expected `KIND: nouns`".into()))?;
            let kind: EntityKind = kind.trim().parse().map_err(err)?;
            let nouns: Vec<String> = nouns
                .split(',')
                .map(|n| n.trim().to_lowercase())
                .filter(|n| !n.is_empty())
                .collect();
            if nouns.is_empty() {
                return Err(err(format!("{kind} has no synonyms")));
            }
            let slot = entries.entry(kind).or_default();
            for n in nouns {
                if !slot.contains(&n) {
                    slot.push(n);
                }
            }
        }
        Ok(SynonymTable {
            entries,
            fallback: None,
        })
    }

    /// Enables matching by embedding similarity between the kind's label
    /// (`location`, `money`, ...) and description nouns when the table misses.
    pub fn with_embedding_fallback(mut self, encoder: Arc<dyn SentenceEncoder>, threshold: f64) -> Self {
        self.fallback = Some((encoder, threshold));
        self
    }

    pub fn synonyms(&self, kind: EntityKind) -> &[String] {
        self.entries.get(&kind).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Whether an argument described by `nouns` accepts entities of `kind`.
    pub fn accepts(&self, kind: EntityKind, nouns: &[String]) -> bool {
        let table = self.synonyms(kind);
        if nouns.iter().any(|n| table.contains(n)) {
            return true;
        }
        let Some((encoder, threshold)) = &self.fallback else {
            return false;
        };
        let label = kind.as_str().to_lowercase();
        let Some(label_vec) = encoder.word_vector(&label) else {
            return false;
        };
        nouns.iter().any(|n| {
            encoder
                .word_vector(n)
                .and_then(|v| cosine_slices(label_vec, v).ok())
                .is_some_and(|sim| sim >= *threshold)
        })
    }

    /// Kinds accepted by an argument described by `nouns`, in the order the
    /// nouns appear.
    pub fn kinds_for(&self, nouns: &[String]) -> Vec<EntityKind> {
        let mut kinds = Vec::new();
        for noun in nouns {
            for kind in EntityKind::ALL {
                if !kinds.contains(&kind) && self.accepts(kind, std::slice::from_ref(noun)) {
                    kinds.push(kind);
                }
            }
        }
        kinds
    }
}
