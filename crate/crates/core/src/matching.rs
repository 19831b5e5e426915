//! Threshold-based selection over ranked method candidates.
//!
//! With the top two similarities `s1 >= s2`:
//! - `s1 >= t1` selects the top candidate (near-ties within `delta` resolve
//!   to the higher one as well);
//! - `t2 <= s1 < t1` asks the user to choose, offering every candidate at or
//!   above `t2` (at most [`MAX_CHOICES`], at least two);
//! - otherwise nothing matches and the request must be rephrased.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_CHOICES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchCandidate {
    pub service_id: String,
    pub method_id: String,
    pub similarity: f64,
}

impl MatchCandidate {
    pub fn new(service_id: impl Into<String>, method_id: impl Into<String>, similarity: f64) -> Self {
        MatchCandidate {
            service_id: service_id.into(),
            method_id: method_id.into(),
            similarity,
        }
    }

    pub fn qualified_name(&self) -> String {
        format!("{}.{}", self.service_id, self.method_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchThresholds {
    pub t1: f64,
    pub t2: f64,
    pub delta: f64,
}

impl Default for MatchThresholds {
    fn default() -> Self {
        MatchThresholds {
            t1: 0.6,
            t2: 0.2,
            delta: 0.01,
        }
    }
}

impl MatchThresholds {
    pub fn new(t1: f64, t2: f64, delta: f64) -> Result<Self, MatchError> {
        let t = MatchThresholds { t1, t2, delta };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), MatchError> {
        let ordered = 0.0 <= self.t2 && self.t2 <= self.t1 && self.t1 <= 1.0;
        if !ordered || !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(MatchError::InvalidThresholds(*self));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "candidates")]
pub enum MatchOutcome {
    Selected(MatchCandidate),
    NeedsDisambiguation(Vec<MatchCandidate>),
    NoMatch,
}

impl MatchOutcome {
    pub fn variant_name(&self) -> &'static str {
        match self {
            MatchOutcome::Selected(_) => "Selected",
            MatchOutcome::NeedsDisambiguation(_) => "NeedsDisambiguation",
            MatchOutcome::NoMatch => "NoMatch",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchError {
    #[error("no candidates to select from")]
    EmptyCandidates,
    #[error("invalid thresholds {0:?}: need 0 <= t2 <= t1 <= 1 and delta >= 0")]
    InvalidThresholds(MatchThresholds),
}

/// Picks a method from `candidates`, which must be sorted by similarity,
/// highest first (as produced by `rank_candidates`).
pub fn select_service(
    candidates: &[MatchCandidate],
    thresholds: &MatchThresholds,
) -> Result<MatchOutcome, MatchError> {
    let top = candidates.first().ok_or(MatchError::EmptyCandidates)?;
    debug_assert!(
        candidates.windows(2).all(|w| w[0].similarity >= w[1].similarity),
        "candidates must be sorted descending"
    );
    let s1 = top.similarity;
    // A near-tie (s1 - s2 <= delta) above t1 also resolves to the top candidate.
    if s1 >= thresholds.t1 {
        return Ok(MatchOutcome::Selected(top.clone()));
    }
    if s1 >= thresholds.t2 && candidates.len() >= 2 {
        let above = candidates
            .iter()
            .take_while(|c| c.similarity >= thresholds.t2)
            .count();
        let offered = above.clamp(2, MAX_CHOICES);
        return Ok(MatchOutcome::NeedsDisambiguation(candidates[..offered].to_vec()));
    }
    Ok(MatchOutcome::NoMatch)
}
