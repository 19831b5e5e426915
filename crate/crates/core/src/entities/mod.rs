//! Rule-based entity recognition, noun extraction from argument descriptions,
//! synonym tables, and argument binding.

mod bind;
mod lexicon;
mod nouns;
mod recognize;
mod synonyms;

use std::fmt;
use std::str::FromStr;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::value::TypedValue;

pub use bind::{bind_arguments, wm_lookup_keys, ArgBinding, BindingSource, BoundArg};
pub use lexicon::{Gazetteer, NounLexicon};
pub use nouns::extract_nouns;
pub use recognize::{format_money, parse_answer, parse_money, recognize_entities, Recognizer};
pub use synonyms::{SynonymError, SynonymTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EntityKind {
    Noun,
    Person,
    Company,
    Number,
    Money,
    Time,
    Date,
    Location,
}

impl EntityKind {
    pub const ALL: [EntityKind; 8] = [
        EntityKind::Noun,
        EntityKind::Person,
        EntityKind::Company,
        EntityKind::Number,
        EntityKind::Money,
        EntityKind::Time,
        EntityKind::Date,
        EntityKind::Location,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Noun => "NOUN",
            EntityKind::Person => "PERSON",
            EntityKind::Company => "COMPANY",
            EntityKind::Number => "NUMBER",
            EntityKind::Money => "MONEY",
            EntityKind::Time => "TIME",
            EntityKind::Date => "DATE",
            EntityKind::Location => "LOCATION",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown entity kind `{s}`"))
    }
}

/// Canonical value of a recognized entity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Normalized {
    Text(String),
    Number(f64),
    /// Minor units (cents).
    Money(i64),
    Date(NaiveDate),
    Time(NaiveTime),
    DateTime(NaiveDateTime),
}

impl Normalized {
    pub fn to_value(&self) -> TypedValue {
        match self {
            Normalized::Text(s) => TypedValue::Str(s.clone()),
            Normalized::Number(n) => TypedValue::Num(*n),
            Normalized::Money(cents) => TypedValue::Num(*cents as f64),
            Normalized::Date(d) => TypedValue::Date(*d),
            Normalized::Time(t) => TypedValue::Str(t.format("%H:%M").to_string()),
            Normalized::DateTime(dt) => TypedValue::Str(dt.format("%Y-%m-%dT%H:%M").to_string()),
        }
    }
}

impl fmt::Display for Normalized {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Normalized::Money(cents) => f.write_str(&format_money(*cents)),
            other => write!(f, "{}", other.to_value()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub kind: EntityKind,
    pub surface: String,
    pub normalized: Normalized,
    /// Character offsets, end exclusive.
    pub span: (usize, usize),
    /// Lowercased word immediately before the entity, if any.
    pub cue: Option<String>,
}
