//! Polls a manifest directory and publishes a new snapshot whenever the set of
//! manifest files or any file's content hash changes.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use serde::Serialize;
use sha2::{Digest, Sha256};
use tracing::warn;

use super::{parse_manifest, RegistrySnapshot};

pub const MANIFEST_EXTENSION: &str = "manifest";

/// A manifest that could not be loaded, or a descriptor left out of a snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub origin: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(origin: &str, message: impl Into<String>) -> Self {
        Diagnostic {
            origin: origin.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.origin, self.message)
    }
}

type Fingerprint = BTreeMap<PathBuf, [u8; 32]>;

pub struct ManifestWatcher {
    dir: PathBuf,
    seen: Fingerprint,
    version: u64,
    current: Arc<RegistrySnapshot>,
    diagnostics: Vec<Diagnostic>,
}

impl ManifestWatcher {
    /// Scans `dir` once and builds version 1.
    pub fn open(dir: impl AsRef<Path>) -> io::Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        if !dir.is_dir() {
            return Err(io::Error::new(
                io::ErrorKind::NotFound,
                format!("{} is not a directory", dir.display()),
            ));
        }
        let mut watcher = ManifestWatcher {
            dir,
            seen: Fingerprint::new(),
            version: 0,
            current: Arc::new(RegistrySnapshot::default()),
            diagnostics: Vec::new(),
        };
        let files = watcher.scan()?;
        watcher.rebuild(files);
        Ok(watcher)
    }

    pub fn current(&self) -> Arc<RegistrySnapshot> {
        Arc::clone(&self.current)
    }

    /// Diagnostics from the most recent rebuild.
    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.diagnostics
    }

    fn scan(&self) -> io::Result<BTreeMap<PathBuf, (Vec<u8>, [u8; 32])>> {
        let mut files = BTreeMap::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if !path.is_file() || path.extension().and_then(|e| e.to_str()) != Some(MANIFEST_EXTENSION) {
                continue;
            }
            let bytes = match fs::read(&path) {
                Ok(b) => b,
                // removed between listing and reading
                Err(e) if e.kind() == io::ErrorKind::NotFound => continue,
                Err(e) => return Err(e),
            };
            let hash: [u8; 32] = Sha256::digest(&bytes).into();
            files.insert(path, (bytes, hash));
        }
        Ok(files)
    }

    fn rebuild(&mut self, files: BTreeMap<PathBuf, (Vec<u8>, [u8; 32])>) {
        let mut diagnostics = Vec::new();
        let mut manifests = Vec::new();
        for (path, (bytes, _)) in &files {
            let origin = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let parsed = std::str::from_utf8(bytes)
                .map_err(|e| format!("not UTF-8: {e}"))
                .and_then(|text| parse_manifest(text).map_err(|e| e.to_string()));
            match parsed {
                Ok(m) => manifests.push((origin, m)),
                Err(reason) => diagnostics.push(Diagnostic::new(&origin, reason)),
            }
        }
        self.version += 1;
        let (snapshot, more) = RegistrySnapshot::assemble(manifests, self.version);
        diagnostics.extend(more);
        for d in &diagnostics {
            warn!(origin = %d.origin, "manifest skipped: {}", d.message);
        }
        self.seen = files.into_iter().map(|(p, (_, h))| (p, h)).collect();
        self.current = Arc::new(snapshot);
        self.diagnostics = diagnostics;
    }

    /// Rescans the directory. Returns the new snapshot when anything changed.
    pub fn poll(&mut self) -> io::Result<Option<Arc<RegistrySnapshot>>> {
        let files = self.scan()?;
        let unchanged = files.len() == self.seen.len()
            && files.iter().all(|(p, (_, h))| self.seen.get(p) == Some(h));
        if unchanged {
            return Ok(None);
        }
        self.rebuild(files);
        Ok(Some(self.current()))
    }

    /// Polls on a background thread, sending each new snapshot on the
    /// returned channel until the handle is stopped or dropped.
    pub fn watch(mut self, poll_interval: Duration) -> (mpsc::Receiver<Arc<RegistrySnapshot>>, WatchHandle) {
        let (tx, rx) = mpsc::channel();
        let stop = Arc::new(AtomicBool::new(false));
        let flag = Arc::clone(&stop);
        let thread = std::thread::spawn(move || {
            while !flag.load(Ordering::Relaxed) {
                std::thread::sleep(poll_interval);
                match self.poll() {
                    Ok(Some(snapshot)) => {
                        if tx.send(snapshot).is_err() {
                            break;
                        }
                    }
                    Ok(None) => {}
                    Err(e) => warn!(dir = %self.dir.display(), "manifest scan failed: {e}"),
                }
            }
        });
        (
            rx,
            WatchHandle {
                stop,
                thread: Some(thread),
            },
        )
    }
}

pub struct WatchHandle {
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl WatchHandle {
    pub fn stop(mut self) {
        self.halt();
    }

    fn halt(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for WatchHandle {
    fn drop(&mut self) {
        self.halt();
    }
}
