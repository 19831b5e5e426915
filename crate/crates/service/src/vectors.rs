//! Synthetic word vectors built from a topic lexicon.
//!
//! Every topic gets a random unit direction; topics are orthogonalized so
//! unrelated topics do not leak into each other. A word's vector is the sum of
//! the directions of its topics plus a little Gaussian noise.

use std::collections::BTreeMap;
use std::io::{self, Write};

use anyhow::{bail, Context};
use nlcompose_core::embedding::{EmbeddingModel, load_word_vectors};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const BUILTIN_TOPICS: &str = include_str!("../data/topics.txt");
pub const DEFAULT_DIMENSION: usize = 50;
pub const DEFAULT_NOISE: f64 = 0.03;
pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct TopicLexicon {
    pub topics: Vec<(String, Vec<String>)>,
}

impl TopicLexicon {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let mut topics = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((name, words)) = line.split_once(':') else {
                bail!("line {}: expected `topic: words`", i + 1);
            };
            let words: Vec<String> = words.split_whitespace().map(str::to_lowercase).collect();
            if words.is_empty() {
                bail!("line {}: topic `{}` has no words", i + 1, name.trim());
            }
            topics.push((name.trim().to_string(), words));
        }
        Ok(TopicLexicon { topics })
    }

    pub fn builtin() -> Self {
        TopicLexicon::parse(BUILTIN_TOPICS).expect("built-in topic lexicon parses")
    }

    /// Topic indices per word, words in lexicographic order.
    pub fn memberships(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut out: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (t, (_, words)) in self.topics.iter().enumerate() {
            for w in words {
                let slot = out.entry(w.as_str()).or_default();
                if !slot.contains(&t) {
                    slot.push(t);
                }
            }
        }
        out
    }

    pub fn words(&self, topic: &str) -> &[String] {
        self.topics
            .iter()
            .find(|(name, _)| name == topic)
            .map(|(_, w)| w.as_slice())
            .unwrap_or(&[])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorParams {
    pub dimension: usize,
    pub seed: u64,
    pub noise: f64,
}

impl Default for VectorParams {
    fn default() -> Self {
        VectorParams {
            dimension: DEFAULT_DIMENSION,
            seed: DEFAULT_SEED,
            noise: DEFAULT_NOISE,
        }
    }
}

fn topic_bases(count: usize, dimension: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut bases: Vec<Vec<f64>> = Vec::with_capacity(count);
    while bases.len() < count {
        let mut v: Vec<f64> = (0..dimension).map(|_| normal.sample(rng)).collect();
        // Gram-Schmidt against the directions drawn so far
        for b in &bases {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        bases.push(v);
    }
    bases
}

/// Deterministic `(word, vector)` rows for `lexicon`.
pub fn generate(lexicon: &TopicLexicon, params: VectorParams) -> anyhow::Result<Vec<(String, Vec<f64>)>> {
    if params.dimension < lexicon.topics.len() {
        bail!(
            "{} topics need at least {} dimensions, got {}",
            lexicon.topics.len(),
            lexicon.topics.len(),
            params.dimension
        );
    }
    if !(params.noise >= 0.0) {
        bail!("noise must be non-negative");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let bases = topic_bases(lexicon.topics.len(), params.dimension, &mut rng);
    let noise = Normal::new(0.0, params.noise).context("noise distribution")?;
    Ok(lexicon
        .memberships()
        .into_iter()
        .map(|(word, topics)| {
            let mut v = vec![0.0; params.dimension];
            for t in topics {
                v.iter_mut().zip(&bases[t]).for_each(|(x, b)| *x += b);
            }
            v.iter_mut().for_each(|x| *x += noise.sample(&mut rng));
            (word.to_string(), v)
        })
        .collect())
}

/// Writes rows in the `token v1 .. vd` format with an `N d` header.
pub fn write_vectors(rows: &[(String, Vec<f64>)], out: &mut impl Write) -> io::Result<()> {
    let dimension = rows.first().map_or(0, |(_, v)| v.len());
    writeln!(out, "{} {}", rows.len(), dimension)?;
    for (word, v) in rows {
        write!(out, "{word}")?;
        for x in v {
            write!(out, " {x:.6}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// The built-in model, round-tripped through the text format so it matches a
/// file written by `gen-vectors` exactly.
pub fn synthetic_model(params: VectorParams) -> anyhow::Result<EmbeddingModel> {
    let rows = generate(&TopicLexicon::builtin(), params)?;
    let mut text = Vec::new();
    write_vectors(&rows, &mut text)?;
    Ok(load_word_vectors("synthetic-topics", text.as_slice())?)
}
