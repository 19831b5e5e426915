//! Ordinal QoS scales.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Non-functional axis a concrete service may constrain. Declaration order is
/// selection priority: battery outranks connectivity, which outranks accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum QosDimension {
    Battery,
    Connectivity,
    Accuracy,
}

impl QosDimension {
    pub const PRIORITY: [QosDimension; 3] =
        [QosDimension::Battery, QosDimension::Connectivity, QosDimension::Accuracy];

    /// Levels from least to most demanding.
    pub fn scale(self) -> &'static [&'static str] {
        match self {
            QosDimension::Battery => &["LOW_BATTERY", "HALF_CHARGED", "FULLY_CHARGED"],
            QosDimension::Connectivity => &["LOCAL", "REQUIRES_WIFI"],
            QosDimension::Accuracy => &["LOW", "MEDIUM", "HIGH"],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QosDimension::Battery => "BATTERY",
            QosDimension::Connectivity => "CONNECTIVITY",
            QosDimension::Accuracy => "ACCURACY",
        }
    }

    /// Position of `level` on this dimension's scale. Accepts the
    /// `REQUIRES_` spelling used by annotation constants (`REQUIRES_HALF_CHARGED`).
    pub fn rank(self, level: &str) -> Option<usize> {
        let scale = self.scale();
        scale.iter().position(|l| *l == level).or_else(|| {
            level
                .strip_prefix("REQUIRES_")
                .and_then(|bare| scale.iter().position(|l| *l == bare))
        })
    }

    /// Canonical spelling of `level`, if it belongs to the scale.
    pub fn canonical(self, level: &str) -> Option<&'static str> {
        self.rank(level).map(|r| self.scale()[r])
    }
}

impl fmt::Display for QosDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QosDimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "BATTERY" => Ok(QosDimension::Battery),
            "CONNECTIVITY" => Ok(QosDimension::Connectivity),
            "ACCURACY" => Ok(QosDimension::Accuracy),
            other => Err(format!("unknown QoS dimension `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QosRequirement {
    pub dimension: QosDimension,
    pub required_level: String,
}

impl QosRequirement {
    /// Builds a requirement, canonicalizing the level. `None` when the level is
    /// not on the dimension's scale.
    pub fn new(dimension: QosDimension, level: &str) -> Option<Self> {
        dimension.canonical(level).map(|l| QosRequirement {
            dimension,
            required_level: l.to_string(),
        })
    }

    pub fn rank(&self) -> usize {
        self.dimension
            .rank(&self.required_level)
            .expect("requirement levels are validated on construction")
    }
}
