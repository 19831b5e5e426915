use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use nlcompose::bench::{run_bench, BenchOptions, DEFAULT_COUNTS};
use nlcompose::script::{render_replies, run_script};
use nlcompose::vectors::{generate, write_vectors, TopicLexicon, VectorParams, DEFAULT_DIMENSION, DEFAULT_NOISE};
use nlcompose::{load_encoder, open_engine, Config};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "nlcompose", version, about = "Natural-language service composition engine")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Model {
    /// Directory of `.manifest` files.
    #[arg(long)]
    manifests: PathBuf,
    /// Word-vector file; the built-in synthetic model when omitted.
    #[arg(long)]
    vectors: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP API, reloading manifests as they change.
    Serve {
        #[command(flatten)]
        model: Model,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Rank methods for one request and print the selection outcome.
    Match {
        text: String,
        #[command(flatten)]
        model: Model,
    },
    /// Play a scripted conversation, one JSON reply per line.
    Compose {
        #[arg(long)]
        script: PathBuf,
        #[command(flatten)]
        model: Model,
    },
    /// Time one-shot requests over synthetic registries.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_COUNTS)]
        counts: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// File with one request per line; built-in requests otherwise.
        #[arg(long)]
        requests: Option<PathBuf>,
        #[arg(long)]
        vectors: Option<PathBuf>,
        /// Worker threads for throughput mode.
        #[arg(long, default_value_t = 1)]
        concurrent: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the synthetic word-vector file.
    GenVectors {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_DIMENSION)]
        dim: usize,
        #[arg(long, default_value_t = DEFAULT_NOISE)]
        noise: f64,
    },
}

fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(io::stderr)
        .init();
    let cli = Cli::parse();
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let stdout = &mut io::stdout().lock();
    match cli.command {
        Command::Serve { model, port, host } => {
            let encoder = load_encoder(model.vectors.as_deref(), config.seed)?;
            let poll = config.poll_interval();
            let (engine, watcher) = open_engine(&model.manifests, encoder, config)?;
            let engine = Arc::new(engine);
            let (updates, _handle) = watcher.watch(poll);
            let reloader = Arc::clone(&engine);
            std::thread::spawn(move || {
                for snapshot in updates {
                    tracing::info!(version = snapshot.version, "registry reloaded");
                    reloader.update_registry(snapshot, Vec::new());
                }
            });
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind((host.as_str(), port)).await?;
                eprintln!("listening on http://{}", listener.local_addr()?);
                nlcompose::http::serve(engine, listener).await
            })?;
        }
        Command::Match { text, model } => {
            let encoder = load_encoder(model.vectors.as_deref(), config.seed)?;
            let (engine, _) = open_engine(&model.manifests, encoder, config)?;
            let registry = engine.registry();
            match engine.match_text(&registry, &text) {
                Ok((ranked, outcome)) => {
                    for c in ranked.iter().take(10) {
                        writeln!(stdout, "{:.4}  {}", c.similarity, c.qualified_name())?;
                    }
                    writeln!(stdout, "{}", serde_json::to_string(&outcome)?)?;
                }
                Err(reply) => writeln!(stdout, "{}", serde_json::to_string(&reply)?)?,
            }
        }
        Command::Compose { script, model } => {
            let encoder = load_encoder(model.vectors.as_deref(), config.seed)?;
            let (engine, _) = open_engine(&model.manifests, encoder, config)?;
            let text = fs::read_to_string(&script).with_context(|| format!("reading {}", script.display()))?;
            let replies = run_script(&engine, &text)?;
            stdout.write_all(render_replies(&replies).as_bytes())?;
        }
        Command::Bench {
            counts,
            reps,
            seed,
            requests,
            vectors,
            concurrent,
            out,
        } => {
            let seed = seed.unwrap_or(config.seed);
            let encoder = load_encoder(vectors.as_deref(), seed)?;
            let mut options = BenchOptions {
                counts,
                repetitions: reps,
                seed,
                concurrency: concurrent,
                ..Default::default()
            };
            if let Some(path) = requests {
                let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                options.requests = text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
            }
            let report = run_bench(encoder, &config, &options)?;
            let json = serde_json::to_string_pretty(&report)?;
            match out {
                Some(path) => fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?,
                None => writeln!(stdout, "{json}")?,
            }
            for row in &report.rows {
                eprintln!(
                    "n={:<5} harmonic={:.4}ms tps={:.6} rate={:.2}%",
                    row.n_services,
                    row.harmonic_mean,
                    row.tps,
                    row.rate * 100.0
                );
            }
        }
        Command::GenVectors { out, seed, dim, noise } => {
            let params = VectorParams {
                dimension: dim,
                seed: seed.unwrap_or(config.seed),
                noise,
            };
            let rows = generate(&TopicLexicon::builtin(), params)?;
            let mut file = io::BufWriter::new(fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?);
            write_vectors(&rows, &mut file)?;
            file.flush()?;
        }
    }
    Ok(())
}
