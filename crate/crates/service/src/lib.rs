//! Session engine, HTTP API and command-line tools around `nlcompose-core`.

pub mod bench;
pub mod config;
pub mod engine;
pub mod executors;
pub mod http;
pub mod script;
pub mod vectors;

use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::sync::Arc;

use anyhow::Context;
use nlcompose_core::embedding::{load_word_vectors, SentenceEncoder};
use nlcompose_core::registry::{ManifestWatcher, RegistrySnapshot};

pub use config::Config;
pub use engine::{Engine, EngineReply};

/// Word vectors from `path`, or the built-in synthetic model seeded by `seed`.
pub fn load_encoder(path: Option<&Path>, seed: u64) -> anyhow::Result<Arc<dyn SentenceEncoder>> {
    match path {
        Some(p) => {
            let file = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let model = load_word_vectors(&name, BufReader::new(file)).with_context(|| format!("in {}", p.display()))?;
            Ok(Arc::new(model))
        }
        None => Ok(Arc::new(vectors::synthetic_model(vectors::VectorParams {
            seed,
            ..Default::default()
        })?)),
    }
}

/// Engine over the manifests in `dir`. The watcher is returned so the
/// caller can keep polling.
pub fn open_engine(
    dir: &Path,
    encoder: Arc<dyn SentenceEncoder>,
    config: Config,
) -> anyhow::Result<(Engine, ManifestWatcher)> {
    let watcher = ManifestWatcher::open(dir).with_context(|| format!("opening manifests in {}", dir.display()))?;
    for d in watcher.diagnostics() {
        tracing::warn!(%d, "manifest skipped");
    }
    let snapshot: Arc<RegistrySnapshot> = watcher.current();
    let engine = Engine::new(config, encoder, snapshot)?;
    engine.update_registry(watcher.current(), watcher.diagnostics().to_vec());
    Ok((engine, watcher))
}
