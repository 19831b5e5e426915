//! Out-of-process executors speaking the JSON wire form.

use std::sync::Arc;

use anyhow::Context;
use nlcompose_core::composition::{ExecutionRequest, ExecutionResponse, Executor, ExecutorSet};
use nlcompose_core::TypedValue;

use crate::config::{Config, ExecutorConfig};

/// POSTs the request as JSON and expects `{"ok": v}` or `{"error": msg}`.
#[derive(Debug, Clone)]
pub struct HttpExecutor {
    pub url: String,
    agent: ureq::Agent,
}

impl HttpExecutor {
    pub fn new(url: impl Into<String>) -> Self {
        HttpExecutor {
            url: url.into(),
            agent: ureq::Agent::new_with_defaults(),
        }
    }
}

impl Executor for HttpExecutor {
    fn execute(&self, request: &ExecutionRequest) -> Result<TypedValue, String> {
        let mut response = self
            .agent
            .post(&self.url)
            .send_json(request)
            .map_err(|e| format!("{}: {e}", self.url))?;
        let reply: ExecutionResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| format!("{}: malformed reply: {e}", self.url))?;
        reply.into()
    }
}

pub fn executor_set(config: &Config) -> anyhow::Result<ExecutorSet> {
    let mut set = ExecutorSet::default().with_timeout(config.executor_timeout());
    for (name, exec) in &config.executors {
        let executor: Arc<dyn Executor> = match exec {
            ExecutorConfig::Mock => Arc::new(nlcompose_core::composition::MockExecutor),
            ExecutorConfig::Http { url } => {
                url.parse::<ureq::http::Uri>().with_context(|| format!("executor `{name}`: bad url `{url}`"))?;
                Arc::new(HttpExecutor::new(url.clone()))
            }
        };
        set.insert(name.clone(), executor);
    }
    Ok(set)
}
