//! Executor contract: run one method of one concrete service.

use std::collections::BTreeMap;
use std::sync::{mpsc, Arc};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::TypedValue;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionRequest {
    pub concrete_id: String,
    pub method_id: String,
    pub args: BTreeMap<String, TypedValue>,
}

/// Wire form of an executor reply: `{"ok": value}` or `{"error": message}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecutionResponse {
    Ok(TypedValue),
    Error(String),
}

impl From<Result<TypedValue, String>> for ExecutionResponse {
    fn from(r: Result<TypedValue, String>) -> Self {
        match r {
            Ok(v) => ExecutionResponse::Ok(v),
            Err(e) => ExecutionResponse::Error(e),
        }
    }
}

impl From<ExecutionResponse> for Result<TypedValue, String> {
    fn from(r: ExecutionResponse) -> Self {
        match r {
            ExecutionResponse::Ok(v) => Ok(v),
            ExecutionResponse::Error(e) => Err(e),
        }
    }
}

pub trait Executor: Send + Sync {
    fn execute(&self, request: &ExecutionRequest) -> Result<TypedValue, String>;
}

impl<F> Executor for F
where
    F: Fn(&ExecutionRequest) -> Result<TypedValue, String> + Send + Sync,
{
    fn execute(&self, request: &ExecutionRequest) -> Result<TypedValue, String> {
        self(request)
    }
}

/// Echoes the request back as a record. Deterministic, for tests and demos.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockExecutor;

impl Executor for MockExecutor {
    fn execute(&self, request: &ExecutionRequest) -> Result<TypedValue, String> {
        let mut record = BTreeMap::new();
        record.insert("concrete".to_string(), TypedValue::from(request.concrete_id.as_str()));
        record.insert("method".to_string(), TypedValue::from(request.method_id.as_str()));
        record.insert("args".to_string(), TypedValue::Record(request.args.clone()));
        Ok(TypedValue::Record(record))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExecError {
    #[error("{0}")]
    Failed(String),
    #[error("executor did not answer within {0:?}")]
    Timeout(Duration),
    #[error("no executor bound to `{0}`")]
    UnknownExecutor(String),
}

/// Executors by binding name, plus the per-invocation timeout.
#[derive(Clone)]
pub struct ExecutorSet {
    executors: BTreeMap<String, Arc<dyn Executor>>,
    pub timeout: Duration,
}

impl std::fmt::Debug for ExecutorSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExecutorSet")
            .field("executors", &self.executors.keys().collect::<Vec<_>>())
            .field("timeout", &self.timeout)
            .finish()
    }
}

impl Default for ExecutorSet {
    /// Only the `mock` binding.
    fn default() -> Self {
        ExecutorSet::empty().with("mock", Arc::new(MockExecutor))
    }
}

impl ExecutorSet {
    pub fn empty() -> Self {
        ExecutorSet {
            executors: BTreeMap::new(),
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn with(mut self, binding: impl Into<String>, executor: Arc<dyn Executor>) -> Self {
        self.executors.insert(binding.into(), executor);
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn insert(&mut self, binding: impl Into<String>, executor: Arc<dyn Executor>) {
        self.executors.insert(binding.into(), executor);
    }

    pub fn get(&self, binding: &str) -> Option<Arc<dyn Executor>> {
        self.executors.get(binding).cloned()
    }

    /// Runs `request` on the executor bound to `binding`, giving up after the
    /// timeout. A timed-out call keeps running on its own thread; its answer
    /// is discarded.
    pub fn execute(&self, binding: &str, request: &ExecutionRequest) -> Result<TypedValue, ExecError> {
        let executor = self
            .get(binding)
            .ok_or_else(|| ExecError::UnknownExecutor(binding.to_string()))?;
        let (tx, rx) = mpsc::channel();
        let request = request.clone();
        thread::spawn(move || {
            let _ = tx.send(executor.execute(&request));
        });
        match rx.recv_timeout(self.timeout) {
            Ok(result) => result.map_err(ExecError::Failed),
            Err(mpsc::RecvTimeoutError::Timeout) => Err(ExecError::Timeout(self.timeout)),
            Err(mpsc::RecvTimeoutError::Disconnected) => Err(ExecError::Failed("executor panicked".into())),
        }
    }
}
