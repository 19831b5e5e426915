//! Device context and QoS-aware concrete selection.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::{ConcreteServiceDescriptor, QosDimension, QosRequirement};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QosError {
    #[error("no concrete service satisfies the QoS requirements of `{0}`")]
    NoViableConcrete(String),
    #[error("invalid context: {0}")]
    InvalidContext(String),
}

/// Current level per QoS dimension.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceContext {
    levels: BTreeMap<QosDimension, String>,
}

impl DeviceContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, dimension: QosDimension, level: &str) -> Result<(), QosError> {
        let canonical = dimension
            .canonical(level)
            .ok_or_else(|| QosError::InvalidContext(format!("`{level}` is not a {dimension} level")))?;
        self.levels.insert(dimension, canonical.to_string());
        Ok(())
    }

    pub fn with(mut self, dimension: QosDimension, level: &str) -> Result<Self, QosError> {
        self.set(dimension, level)?;
        Ok(self)
    }

    pub fn level(&self, dimension: QosDimension) -> Option<&str> {
        self.levels.get(&dimension).map(String::as_str)
    }

    /// Rank of the current level; an unreported dimension sits at the bottom
    /// of its scale.
    pub fn rank(&self, dimension: QosDimension) -> usize {
        self.level(dimension).and_then(|l| dimension.rank(l)).unwrap_or(0)
    }

    pub fn satisfies(&self, requirement: &QosRequirement) -> bool {
        self.rank(requirement.dimension) >= requirement.rank()
    }

    pub fn levels(&self) -> &BTreeMap<QosDimension, String> {
        &self.levels
    }
}

/// Parses `BATTERY=HALF_CHARGED CONNECTIVITY=REQUIRES_WIFI` (spaces or commas).
impl FromStr for DeviceContext {
    type Err = QosError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut ctx = DeviceContext::new();
        for pair in s.split(|c: char| c.is_whitespace() || c == ',').filter(|p| !p.is_empty()) {
            let (dim, level) = pair
                .split_once('=')
                .ok_or_else(|| QosError::InvalidContext(format!("expected DIM=LEVEL, found `{pair}`")))?;
            let dim: QosDimension = dim.trim().parse().map_err(QosError::InvalidContext)?;
            ctx.set(dim, level.trim())?;
        }
        Ok(ctx)
    }
}

impl fmt::Display for DeviceContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.levels.iter().map(|(d, l)| format!("{d}={l}")).collect();
        f.write_str(&parts.join(" "))
    }
}

// Required rank per dimension in priority order; higher sorts stricter.
fn strictness(c: &ConcreteServiceDescriptor, method_id: &str) -> Vec<Option<usize>> {
    QosDimension::PRIORITY
        .iter()
        .map(|d| {
            c.requirements(method_id)
                .iter()
                .filter(|r| r.dimension == *d)
                .map(QosRequirement::rank)
                .max()
        })
        .collect()
}

/// Picks the concrete service for `method_id` whose requirements all hold in
/// `context`. Among viable ones the most demanding wins, compared battery
/// first, then connectivity, then accuracy; remaining ties go to the smallest
/// concrete id.
pub fn select_concrete<'a>(
    candidates: &[&'a ConcreteServiceDescriptor],
    method_id: &str,
    context: &DeviceContext,
) -> Result<&'a ConcreteServiceDescriptor, QosError> {
    candidates
        .iter()
        .copied()
        .filter(|c| {
            QosDimension::PRIORITY.iter().all(|d| {
                c.requirements(method_id)
                    .iter()
                    .filter(|r| r.dimension == *d)
                    .all(|r| context.satisfies(r))
            })
        })
        .min_by(|a, b| {
            strictness(b, method_id)
                .cmp(&strictness(a, method_id))
                .then_with(|| a.concrete_id.cmp(&b.concrete_id))
        })
        .ok_or_else(|| QosError::NoViableConcrete(method_id.to_string()))
}
