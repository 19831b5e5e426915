use std::cmp::Ordering;

use serde::Serialize;
use tracing::warn;

use super::{EmbeddingError, EmbeddingVector, SentenceEncoder};
use crate::matching::MatchCandidate;
use crate::registry::CorpusEntry;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddedEntry {
    pub sentence: String,
    pub service_id: String,
    pub method_id: String,
    pub vector: EmbeddingVector,
    #[serde(skip)]
    slot: usize,
}

/// Embedded capability sentences for one registry version.
#[derive(Debug, Clone, Serialize)]
pub struct EmbeddedCorpus {
    pub model_name: String,
    pub registry_version: u64,
    pub entries: Vec<EmbeddedEntry>,
    /// Entries that embedded to the zero vector or were dropped.
    pub diagnostics: Vec<String>,
    // distinct (service_id, method_id) pairs in lexicographic order
    #[serde(skip)]
    methods: Vec<(String, String)>,
    #[serde(skip)]
    norms: Vec<f64>,
    // entry vectors back to back, `dimension` values each
    #[serde(skip)]
    matrix: Vec<f64>,
    #[serde(skip)]
    dimension: usize,
}

impl EmbeddedCorpus {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn method_count(&self) -> usize {
        self.methods.len()
    }
}

/// Embeds every corpus sentence, preserving order. Sentences without any
/// token are dropped; sentences with no known token keep a zero vector. Both
/// cases are recorded in `diagnostics`.
pub fn index_corpus(
    encoder: &dyn SentenceEncoder,
    corpus: &[CorpusEntry],
    registry_version: u64,
) -> EmbeddedCorpus {
    let mut methods: Vec<(String, String)> = corpus
        .iter()
        .map(|e| (e.service_id.clone(), e.method_id.clone()))
        .collect();
    methods.sort();
    methods.dedup();

    let mut entries = Vec::with_capacity(corpus.len());
    let mut norms = Vec::with_capacity(corpus.len());
    let mut diagnostics = Vec::new();
    for entry in corpus {
        let vector = match encoder.embed(&entry.sentence) {
            Ok(v) => v,
            Err(e) => {
                let msg = format!(
                    "{}.{}: capability {:?} skipped: {e}",
                    entry.service_id, entry.method_id, entry.sentence
                );
                warn!("{msg}");
                diagnostics.push(msg);
                continue;
            }
        };
        if vector.known_token_count == 0 {
            let msg = format!(
                "{}.{}: capability {:?} has no known tokens",
                entry.service_id, entry.method_id, entry.sentence
            );
            warn!("{msg}");
            diagnostics.push(msg);
        }
        let key = (entry.service_id.clone(), entry.method_id.clone());
        let slot = methods.binary_search(&key).expect("method collected above");
        norms.push(vector.norm());
        entries.push(EmbeddedEntry {
            sentence: entry.sentence.clone(),
            service_id: entry.service_id.clone(),
            method_id: entry.method_id.clone(),
            vector,
            slot,
        });
    }
    let dimension = entries.first().map_or(0, |e| e.vector.values.len());
    let matrix = entries.iter().flat_map(|e| e.vector.values.iter().copied()).collect();
    EmbeddedCorpus {
        model_name: encoder.name().to_string(),
        registry_version,
        entries,
        diagnostics,
        methods,
        norms,
        matrix,
        dimension,
    }
}

/// Scores every entry against `request` and keeps each method's best
/// capability. Sorted by similarity descending, then service id and method id.
pub fn rank_candidates(
    index: &EmbeddedCorpus,
    request: &EmbeddingVector,
) -> Result<Vec<MatchCandidate>, EmbeddingError> {
    rank_top(index, request, usize::MAX)
}

/// The first `limit` entries of [`rank_candidates`], without sorting or
/// cloning the rest.
pub fn rank_top(
    index: &EmbeddedCorpus,
    request: &EmbeddingVector,
    limit: usize,
) -> Result<Vec<MatchCandidate>, EmbeddingError> {
    if index.entries.is_empty() {
        return Err(EmbeddingError::EmptyIndex);
    }
    let request_norm = request.norm();
    let mut best = vec![f64::NEG_INFINITY; index.methods.len()];
    if index.dimension != request.values.len() {
        return Err(EmbeddingError::DimensionMismatch(index.dimension, request.values.len()));
    }
    let rows = index.matrix.chunks_exact(index.dimension.max(1));
    for ((entry, norm), values) in index.entries.iter().zip(&index.norms).zip(rows) {
        let sim = if *norm == 0.0 || request_norm == 0.0 {
            0.0
        } else {
            let dot: f64 = values.iter().zip(&request.values).map(|(a, b)| a * b).sum();
            (dot / (norm * request_norm)).clamp(-1.0, 1.0)
        };
        let slot = &mut best[entry.slot];
        if sim > *slot {
            *slot = sim;
        }
    }
    let mut ranked: Vec<(usize, f64)> = best
        .into_iter()
        .enumerate()
        .filter(|(_, s)| s.is_finite())
        .collect();
    // slots are already in lexicographic order, so the slot index breaks ties
    let order = |a: &(usize, f64), b: &(usize, f64)| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0));
    if limit < ranked.len() {
        if limit == 0 {
            return Ok(Vec::new());
        }
        ranked.select_nth_unstable_by(limit - 1, order);
        ranked.truncate(limit);
    }
    ranked.sort_by(order);
    Ok(ranked
        .into_iter()
        .map(|(slot, similarity)| {
            let (service_id, method_id) = &index.methods[slot];
            MatchCandidate {
                service_id: service_id.clone(),
                method_id: method_id.clone(),
                similarity,
            }
        })
        .collect())
}

/// Reference scorer used by tests: plain cosine per entry, no precomputed norms.
#[cfg(test)]
pub(crate) fn brute_force_rank(index: &EmbeddedCorpus, request: &EmbeddingVector) -> Vec<MatchCandidate> {
    use std::collections::BTreeMap;
    let mut best: BTreeMap<(String, String), f64> = BTreeMap::new();
    for e in &index.entries {
        let s = super::cosine_slices(&e.vector.values, &request.values).unwrap();
        let slot = best
            .entry((e.service_id.clone(), e.method_id.clone()))
            .or_insert(f64::NEG_INFINITY);
        *slot = slot.max(s);
    }
    let mut out: Vec<MatchCandidate> = best
        .into_iter()
        .map(|((service_id, method_id), similarity)| MatchCandidate {
            service_id,
            method_id,
            similarity,
        })
        .collect();
    out.sort_by(|a, b| {
        b.similarity
            .partial_cmp(&a.similarity)
            .unwrap()
            .then_with(|| (&a.service_id, &a.method_id).cmp(&(&b.service_id, &b.method_id)))
    });
    out
}
