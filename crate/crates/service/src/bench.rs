//! Response-time benchmark over synthetic registries of increasing size.

use std::sync::Arc;
use std::thread;
use std::time::Instant;

use anyhow::bail;
use nlcompose_core::embedding::SentenceEncoder;
use nlcompose_core::metrics::{scalability_stats, ScalabilityRow};
use nlcompose_core::registry::{
    AbstractServiceDescriptor, ArgDescriptor, ConcreteServiceDescriptor, MethodDescriptor, RegistrySnapshot,
};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::engine::{Engine, EngineReply};
use crate::vectors::TopicLexicon;

pub const DEFAULT_COUNTS: [usize; 4] = [5, 50, 500, 5000];

pub const DEFAULT_REQUESTS: [&str; 5] = [
    "look for cheap flights",
    "book a hotel room",
    "check my calendar availability",
    "get a taxi to the airport",
    "send a text message to a friend",
];

const VERB_TOPICS: [&str; 4] = ["search", "book", "inspect", "add"];
const NOUN_TOPICS: [&str; 10] = [
    "flight", "hotel", "calendar", "weather", "transport", "message", "leisure", "map", "price", "place",
];

fn pick<'a>(rng: &mut ChaCha8Rng, lexicon: &'a TopicLexicon, topics: &[&str]) -> &'a str {
    let topic = topics.choose(rng).expect("topic list is not empty");
    lexicon.words(topic).choose(rng).map_or("thing", String::as_str)
}

/// `count` single-method services with capability sentences drawn from the
/// topic lexicon, each with one mock concrete. Same seed, same registry.
pub fn synthetic_registry(count: usize, seed: u64, lexicon: &TopicLexicon) -> RegistrySnapshot {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut snapshot = RegistrySnapshot {
        version: 1,
        ..Default::default()
    };
    for i in 0..count {
        let service_id = format!("Synthetic{i:05}");
        let capabilities = (0..2)
            .map(|_| {
                let verb = pick(&mut rng, lexicon, &VERB_TOPICS);
                let a = pick(&mut rng, lexicon, &NOUN_TOPICS);
                let b = pick(&mut rng, lexicon, &NOUN_TOPICS);
                match rng.random_range(0..3) {
                    0 => format!("{verb} a {a}"),
                    1 => format!("{verb} the {a} for a {b}"),
                    _ => format!("{verb} {a} and {b}"),
                }
            })
            .collect();
        let method = MethodDescriptor {
            method_id: format!("op{i}"),
            capabilities,
            args: Vec::<ArgDescriptor>::new(),
            returns_key: format!("synthetic{i}Result"),
            returns_desc: "synthetic result".into(),
        };
        snapshot.abstracts.insert(
            service_id.clone(),
            AbstractServiceDescriptor {
                service_id: service_id.clone(),
                methods: vec![method],
            },
        );
        let concrete_id = format!("{service_id}Mock");
        snapshot.concretes.insert(
            concrete_id.clone(),
            ConcreteServiceDescriptor {
                concrete_id,
                implements: service_id,
                qos: Default::default(),
                executor_binding: ConcreteServiceDescriptor::DEFAULT_EXECUTOR.into(),
            },
        );
    }
    snapshot
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOptions {
    pub counts: Vec<usize>,
    pub requests: Vec<String>,
    pub repetitions: usize,
    pub seed: u64,
    /// Worker threads; 1 runs requests one after another.
    pub concurrency: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            counts: DEFAULT_COUNTS.to_vec(),
            requests: DEFAULT_REQUESTS.iter().map(|s| s.to_string()).collect(),
            repetitions: 10,
            seed: crate::vectors::DEFAULT_SEED,
            concurrency: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub mode: String,
    pub seed: u64,
    pub repetitions: usize,
    pub requests: Vec<String>,
    pub rows: Vec<ScalabilityRow>,
    /// Runs left out of the statistics, with the reason.
    pub notes: Vec<String>,
}

// One timed handle_utterance call; `Err` carries the engine error message.
fn timed(engine: &Engine, text: &str) -> Result<f64, String> {
    let started = Instant::now();
    let reply = engine.one_shot(text);
    let ms = started.elapsed().as_secs_f64() * 1000.0;
    match reply {
        EngineReply::Error { message, .. } => Err(message),
        _ => Ok(ms),
    }
}

pub fn run_bench(encoder: Arc<dyn SentenceEncoder>, config: &Config, options: &BenchOptions) -> anyhow::Result<BenchReport> {
    if options.counts.is_empty() || options.requests.is_empty() || options.repetitions == 0 {
        bail!("bench needs at least one count, one request and one repetition");
    }
    let lexicon = TopicLexicon::builtin();
    let mut rows: Vec<ScalabilityRow> = Vec::new();
    let mut notes = Vec::new();
    let workers = options.concurrency.max(1);
    for &count in &options.counts {
        let snapshot = Arc::new(synthetic_registry(count, options.seed, &lexicon));
        let engine = Engine::new(config.clone(), Arc::clone(&encoder), snapshot)?;
        // warm-up, not measured
        let _ = engine.one_shot(&options.requests[0]);
        let jobs: Vec<&str> = (0..options.repetitions)
            .flat_map(|_| options.requests.iter().map(String::as_str))
            .collect();
        let outcomes: Vec<(usize, &str, Result<f64, String>)> = if workers == 1 {
            jobs.iter().enumerate().map(|(i, t)| (i, *t, timed(&engine, t))).collect()
        } else {
            let chunk = jobs.len().div_ceil(workers);
            let engine = &engine;
            thread::scope(|scope| {
                let handles: Vec<_> = jobs
                    .chunks(chunk)
                    .enumerate()
                    .map(|(c, part)| {
                        scope.spawn(move || {
                            part.iter()
                                .enumerate()
                                .map(|(i, t)| (c * chunk + i, *t, timed(engine, t)))
                                .collect::<Vec<_>>()
                        })
                    })
                    .collect();
                handles.into_iter().flat_map(|h| h.join().expect("bench worker")).collect()
            })
        };
        let mut samples = Vec::with_capacity(outcomes.len());
        for (run, text, outcome) in outcomes {
            match outcome {
                // sub-resolution timings would break the harmonic mean
                Ok(ms) => samples.push(ms.max(1e-6)),
                Err(e) => notes.push(format!("n={count} run {run} `{text}`: {e}")),
            }
        }
        let baseline = rows.first().map(|r| r.tps);
        rows.push(scalability_stats(&samples, count, baseline)?);
    }
    Ok(BenchReport {
        mode: if workers == 1 { "sequential".into() } else { format!("concurrent-{workers}") },
        seed: options.seed,
        repetitions: options.repetitions,
        requests: options.requests.clone(),
        rows,
        notes,
    })
}
