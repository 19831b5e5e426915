//! Service registry: manifest descriptors, immutable snapshots, corpus
//! extraction and a polling directory watcher.

mod manifest;
pub mod qos;
mod watcher;

use std::collections::BTreeMap;
use std::sync::Arc;

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entities::EntityKind;

pub use manifest::{parse_manifest, serialize_manifest, Manifest};
pub use qos::{QosDimension, QosRequirement};
pub use watcher::{Diagnostic, ManifestWatcher, WatchHandle, MANIFEST_EXTENSION};

static ID_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"^[A-Za-z_][A-Za-z0-9_]*$").unwrap());

pub fn is_identifier(s: &str) -> bool {
    ID_RE.is_match(s)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistryError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("invalid descriptor: {0}")]
    Invariant(String),
    #[error("unknown service `{0}`")]
    UnknownService(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgDescriptor {
    pub name: String,
    pub description: String,
    pub declared_kind: Option<EntityKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodDescriptor {
    pub method_id: String,
    pub capabilities: Vec<String>,
    pub args: Vec<ArgDescriptor>,
    /// Working-memory key the method's result is stored under.
    pub returns_key: String,
    pub returns_desc: String,
}

impl MethodDescriptor {
    pub fn default_returns_key(method_id: &str) -> String {
        format!("{method_id}Result")
    }

    pub fn arg(&self, name: &str) -> Option<&ArgDescriptor> {
        self.args.iter().find(|a| a.name == name)
    }

    pub fn validate(&self) -> Result<(), RegistryError> {
        if !is_identifier(&self.method_id) {
            return Err(RegistryError::Invariant(format!(
                "method id `{}` is not an identifier",
                self.method_id
            )));
        }
        if self.capabilities.is_empty() {
            return Err(RegistryError::Invariant(format!(
                "method `{}` has no capability sentences",
                self.method_id
            )));
        }
        if self.capabilities.iter().any(|c| c.trim().is_empty()) {
            return Err(RegistryError::Invariant(format!(
                "method `{}` has an empty capability sentence",
                self.method_id
            )));
        }
        for (i, arg) in self.args.iter().enumerate() {
            if !is_identifier(&arg.name) {
                return Err(RegistryError::Invariant(format!(
                    "argument `{}` is not an identifier",
                    arg.name
                )));
            }
            if arg.description.trim().is_empty() {
                return Err(RegistryError::Invariant(format!(
                    "argument `{}` of `{}` has no description",
                    arg.name, self.method_id
                )));
            }
            if self.args[..i].iter().any(|a| a.name == arg.name) {
                return Err(RegistryError::Invariant(format!(
                    "argument `{}` declared twice in `{}`",
                    arg.name, self.method_id
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractServiceDescriptor {
    pub service_id: String,
    pub methods: Vec<MethodDescriptor>,
}

impl AbstractServiceDescriptor {
    pub fn method(&self, method_id: &str) -> Option<&MethodDescriptor> {
        self.methods.iter().find(|m| m.method_id == method_id)
    }

    pub fn validate(&self) -> Result<(), RegistryError> {
        if !is_identifier(&self.service_id) {
            return Err(RegistryError::Invariant(format!(
                "service id `{}` is not an identifier",
                self.service_id
            )));
        }
        if self.methods.is_empty() {
            return Err(RegistryError::Invariant(format!(
                "service `{}` declares no methods",
                self.service_id
            )));
        }
        for (i, m) in self.methods.iter().enumerate() {
            m.validate()?;
            if self.methods[..i].iter().any(|o| o.method_id == m.method_id) {
                return Err(RegistryError::Invariant(format!(
                    "method `{}` declared twice in `{}`",
                    m.method_id, self.service_id
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcreteServiceDescriptor {
    pub concrete_id: String,
    pub implements: String,
    /// Requirements per method id, in declaration order.
    pub qos: BTreeMap<String, Vec<QosRequirement>>,
    pub executor_binding: String,
}

impl ConcreteServiceDescriptor {
    pub const DEFAULT_EXECUTOR: &'static str = "mock";

    pub fn requirements(&self, method_id: &str) -> &[QosRequirement] {
        self.qos.get(method_id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Checks the cross-descriptor invariants against the abstract service it
    /// claims to implement.
    pub fn validate_against(&self, service: &AbstractServiceDescriptor) -> Result<(), RegistryError> {
        if self.implements != service.service_id {
            return Err(RegistryError::Invariant(format!(
                "`{}` implements `{}`, not `{}`",
                self.concrete_id, self.implements, service.service_id
            )));
        }
        for method_id in self.qos.keys() {
            if service.method(method_id).is_none() {
                return Err(RegistryError::Invariant(format!(
                    "`{}` declares QoS for unknown method `{}.{}`",
                    self.concrete_id, service.service_id, method_id
                )));
            }
        }
        Ok(())
    }
}

/// Immutable view of all registered services at one version.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegistrySnapshot {
    pub abstracts: BTreeMap<String, AbstractServiceDescriptor>,
    pub concretes: BTreeMap<String, ConcreteServiceDescriptor>,
    pub version: u64,
}

impl RegistrySnapshot {
    /// Assembles a snapshot from parsed manifests. Descriptors that break a
    /// registry-level invariant (duplicate ids, dangling `implements`) are left
    /// out and reported.
    pub fn assemble(manifests: Vec<(String, Manifest)>, version: u64) -> (RegistrySnapshot, Vec<Diagnostic>) {
        let mut snapshot = RegistrySnapshot {
            version,
            ..Default::default()
        };
        let mut diagnostics = Vec::new();
        let mut concretes = Vec::new();
        for (origin, manifest) in manifests {
            match manifest {
                Manifest::Abstract(service) => {
                    if snapshot.abstracts.contains_key(&service.service_id) {
                        diagnostics.push(Diagnostic::new(
                            &origin,
                            format!("duplicate service id `{}` ignored", service.service_id),
                        ));
                    } else {
                        snapshot.abstracts.insert(service.service_id.clone(), service);
                    }
                }
                Manifest::Concrete(concrete) => concretes.push((origin, concrete)),
            }
        }
        for (origin, concrete) in concretes {
            let verdict = match snapshot.abstracts.get(&concrete.implements) {
                None => Err(format!(
                    "`{}` implements unregistered service `{}`",
                    concrete.concrete_id, concrete.implements
                )),
                Some(service) => concrete.validate_against(service).map_err(|e| e.to_string()),
            };
            match verdict {
                Err(reason) => diagnostics.push(Diagnostic::new(&origin, reason)),
                Ok(()) if snapshot.concretes.contains_key(&concrete.concrete_id) => {
                    diagnostics.push(Diagnostic::new(
                        &origin,
                        format!("duplicate concrete id `{}` ignored", concrete.concrete_id),
                    ));
                }
                Ok(()) => {
                    snapshot.concretes.insert(concrete.concrete_id.clone(), concrete);
                }
            }
        }
        (snapshot, diagnostics)
    }

    pub fn method(&self, service_id: &str, method_id: &str) -> Option<&MethodDescriptor> {
        self.abstracts.get(service_id)?.method(method_id)
    }

    pub fn method_count(&self) -> usize {
        self.abstracts.values().map(|s| s.methods.len()).sum()
    }
}

/// One capability sentence with the method it describes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub sentence: String,
    pub service_id: String,
    pub method_id: String,
}

/// Extracts every capability sentence of every method, ordered by
/// service id, method id and capability position.
pub fn build_corpus(snapshot: &RegistrySnapshot) -> Vec<CorpusEntry> {
    let mut entries = Vec::new();
    for service in snapshot.abstracts.values() {
        let mut methods: Vec<&MethodDescriptor> = service.methods.iter().collect();
        methods.sort_by(|a, b| a.method_id.cmp(&b.method_id));
        for method in methods {
            for sentence in &method.capabilities {
                entries.push(CorpusEntry {
                    sentence: sentence.clone(),
                    service_id: service.service_id.clone(),
                    method_id: method.method_id.clone(),
                });
            }
        }
    }
    entries
}

/// All concrete services implementing `service_id`, ordered by concrete id.
pub fn lookup_concretes<'a>(
    snapshot: &'a RegistrySnapshot,
    service_id: &str,
) -> Result<Vec<&'a ConcreteServiceDescriptor>, RegistryError> {
    if !snapshot.abstracts.contains_key(service_id) {
        return Err(RegistryError::UnknownService(service_id.to_string()));
    }
    Ok(snapshot
        .concretes
        .values()
        .filter(|c| c.implements == service_id)
        .collect())
}

pub type SharedSnapshot = Arc<RegistrySnapshot>;
