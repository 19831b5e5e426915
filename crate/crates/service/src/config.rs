//! Engine configuration, read from TOML.
//!
//! ```toml
//! poll_interval_ms = 500
//! executor_timeout_ms = 10000
//! iteration_cap = 100
//! reference_year = 2024
//! context = "BATTERY=FULLY_CHARGED CONNECTIVITY=REQUIRES_WIFI"
//! synonyms = "synonyms.txt"
//! rules = ["trip.rules"]
//! seed = 7
//!
//! [thresholds]
//! t1 = 0.6
//! t2 = 0.2
//! delta = 0.01
//!
//! [gazetteers]
//! locations = "cities.txt"
//!
//! [executors.weather]
//! kind = "http"
//! url = "http://127.0.0.1:9100/execute"
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context;
use nlcompose_core::composition::DEFAULT_ITERATION_CAP;
use nlcompose_core::matching::MatchThresholds;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ExecutorConfig {
    Mock,
    Http { url: String },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GazetteerPaths {
    pub locations: Option<PathBuf>,
    pub persons: Option<PathBuf>,
    pub companies: Option<PathBuf>,
    pub nouns: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub thresholds: MatchThresholds,
    /// Manifest directory poll interval.
    pub poll_interval_ms: u64,
    pub executor_timeout_ms: u64,
    pub iteration_cap: usize,
    /// Year assumed for dates without one.
    pub reference_year: i32,
    /// Device context new sessions start with.
    pub context: String,
    pub gazetteers: GazetteerPaths,
    pub synonyms: Option<PathBuf>,
    /// Embedding similarity for the synonym fallback; off when unset.
    pub synonym_fallback: Option<f64>,
    /// Rule files fired after each executed plan.
    pub rules: Vec<PathBuf>,
    /// Executor bindings besides the built-in `mock`.
    pub executors: BTreeMap<String, ExecutorConfig>,
    /// Seed for synthetic vectors and benchmark manifests.
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            thresholds: MatchThresholds::default(),
            poll_interval_ms: 500,
            executor_timeout_ms: 10_000,
            iteration_cap: DEFAULT_ITERATION_CAP,
            reference_year: 2024,
            context: String::new(),
            gazetteers: GazetteerPaths::default(),
            synonyms: None,
            synonym_fallback: None,
            rules: Vec::new(),
            executors: BTreeMap::new(),
            seed: crate::vectors::DEFAULT_SEED,
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let config: Config = toml::from_str(text)?;
        config.thresholds.validate()?;
        config
            .context
            .parse::<nlcompose_core::composition::DeviceContext>()
            .context("`context`")?;
        Ok(config)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config = Config::parse(&text).with_context(|| format!("in {}", path.display()))?;
        if let Some(dir) = path.parent() {
            config.resolve_paths(dir);
        }
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let g = &mut self.gazetteers;
        for p in [&mut g.locations, &mut g.persons, &mut g.companies, &mut g.nouns, &mut self.synonyms]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        self.rules.iter_mut().for_each(fix);
    }

    pub fn poll_interval(&self) -> Duration {
        Duration::from_millis(self.poll_interval_ms)
    }

    pub fn executor_timeout(&self) -> Duration {
        Duration::from_millis(self.executor_timeout_ms)
    }
}
