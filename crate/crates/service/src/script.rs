//! Scripted conversations.
//!
//! ```text
//! # comment
//! context BATTERY=FULLY_CHARGED CONNECTIVITY=REQUIRES_WIFI
//! wm flight.from = "Pittsburgh"
//! say check what's on my schedule from Sept. 29 to Oct. 11
//! answer 2
//! ```
//!
//! `wm` values are JSON literals. Each `say` or `answer` produces one reply.

use nlcompose_core::TypedValue;
use thiserror::Error;

use crate::engine::{Engine, EngineReply};

#[derive(Debug, Clone, PartialEq)]
pub enum ScriptLine {
    Context(String),
    Wm(String, TypedValue),
    Say(String),
    Answer(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("script line {line}: {reason}")]
pub struct ScriptError {
    pub line: usize,
    pub reason: String,
}

pub fn parse_script(text: &str) -> Result<Vec<(usize, ScriptLine)>, ScriptError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |reason: String| ScriptError { line: i + 1, reason };
        let (command, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        let parsed = match command {
            "context" => ScriptLine::Context(rest.to_string()),
            "say" => ScriptLine::Say(rest.to_string()),
            "answer" => ScriptLine::Answer(rest.to_string()),
            "wm" => {
                let (key, value) = rest
                    .split_once('=')
                    .ok_or_else(|| err("expected `wm KEY = VALUE`".into()))?;
                let json: serde_json::Value =
                    serde_json::from_str(value.trim()).map_err(|e| err(format!("value is not JSON: {e}")))?;
                let value = TypedValue::from_json(&json).ok_or_else(|| err("null is not a value".into()))?;
                ScriptLine::Wm(key.trim().to_string(), value)
            }
            other => return Err(err(format!("unknown command `{other}`"))),
        };
        out.push((i + 1, parsed));
    }
    Ok(out)
}

/// Runs a script in a fresh session and returns the replies in order.
pub fn run_script(engine: &Engine, text: &str) -> Result<Vec<EngineReply>, ScriptError> {
    let lines = parse_script(text)?;
    let id = engine.create_session();
    let mut replies = Vec::new();
    for (line, command) in lines {
        let reply = match command {
            ScriptLine::Context(ctx) => {
                let ctx = ctx.parse().map_err(|e: nlcompose_core::composition::QosError| ScriptError {
                    line,
                    reason: e.to_string(),
                })?;
                engine.with_session(&id, |s| s.context = ctx).expect("script session exists");
                continue;
            }
            ScriptLine::Wm(key, value) => {
                engine
                    .with_session(&id, |s| s.wm.put(key, value, "script"))
                    .expect("script session exists");
                continue;
            }
            ScriptLine::Say(text) => engine.handle_utterance(&id, &text),
            ScriptLine::Answer(text) => engine.answer_pending(&id, &text),
        };
        replies.push(reply.expect("script session exists"));
    }
    let _ = engine.close_session(&id);
    Ok(replies)
}

/// One JSON document per reply, newline-terminated.
pub fn render_replies(replies: &[EngineReply]) -> String {
    let mut out = String::new();
    for r in replies {
        out.push_str(&serde_json::to_string(r).expect("replies serialize"));
        out.push('\n');
    }
    out
}
