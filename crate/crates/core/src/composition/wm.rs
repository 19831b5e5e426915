//! Session working memory with an append-only audit log.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::value::TypedValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WmOp {
    Put,
    Remove,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub seq: u64,
    pub op: WmOp,
    pub key: String,
    /// Value written by a put.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<TypedValue>,
    /// Rule name or other origin of the change.
    pub source: String,
    /// Milliseconds since the Unix epoch.
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkingMemory {
    entries: BTreeMap<String, TypedValue>,
    audit: Vec<AuditEntry>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl WorkingMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &str) -> Option<&TypedValue> {
        self.entries.get(key)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn put(&mut self, key: impl Into<String>, value: TypedValue, source: &str) {
        let key = key.into();
        self.log(WmOp::Put, &key, Some(value.clone()), source);
        self.entries.insert(key, value);
    }

    /// Removes `key`, returning the old value. Removing an absent key is
    /// still logged.
    pub fn remove(&mut self, key: &str, source: &str) -> Option<TypedValue> {
        self.log(WmOp::Remove, key, None, source);
        self.entries.remove(key)
    }

    fn log(&mut self, op: WmOp, key: &str, value: Option<TypedValue>, source: &str) {
        self.audit.push(AuditEntry {
            seq: self.audit.len() as u64,
            op,
            key: key.to_string(),
            value,
            source: source.to_string(),
            timestamp_ms: now_ms(),
        });
    }

    pub fn entries(&self) -> &BTreeMap<String, TypedValue> {
        &self.entries
    }

    pub fn audit(&self) -> &[AuditEntry] {
        &self.audit
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Rebuilds the entry map from an audit log.
    pub fn replay(audit: &[AuditEntry]) -> BTreeMap<String, TypedValue> {
        let mut entries = BTreeMap::new();
        for e in audit {
            match (e.op, &e.value) {
                (WmOp::Put, Some(v)) => {
                    entries.insert(e.key.clone(), v.clone());
                }
                (WmOp::Put, None) => {}
                (WmOp::Remove, _) => {
                    entries.remove(&e.key);
                }
            }
        }
        entries
    }

    /// Hash over the current values of `keys` (absent keys included as absent).
    pub fn fingerprint<'a>(&self, keys: impl IntoIterator<Item = &'a str>) -> u64 {
        let mut h = DefaultHasher::new();
        for key in keys {
            key.hash(&mut h);
            self.entries.get(key).hash(&mut h);
        }
        h.finish()
    }
}
