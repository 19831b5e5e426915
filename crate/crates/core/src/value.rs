//! Dynamically typed values stored in working memory and passed to executors.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq)]
pub enum TypedValue {
    Str(String),
    Num(f64),
    Bool(bool),
    Date(NaiveDate),
    List(Vec<TypedValue>),
    Record(BTreeMap<String, TypedValue>),
}

impl TypedValue {
    pub fn kind_name(&self) -> &'static str {
        match self {
            TypedValue::Str(_) => "string",
            TypedValue::Num(_) => "number",
            TypedValue::Bool(_) => "boolean",
            TypedValue::Date(_) => "date",
            TypedValue::List(_) => "list",
            TypedValue::Record(_) => "record",
        }
    }

    /// Ordering between two values of the same scalar kind. `None` when the
    /// kinds differ or the kind has no natural order.
    pub fn partial_order(&self, other: &TypedValue) -> Option<Ordering> {
        match (self, other) {
            (TypedValue::Num(a), TypedValue::Num(b)) => a.partial_cmp(b),
            (TypedValue::Str(a), TypedValue::Str(b)) => Some(a.cmp(b)),
            (TypedValue::Bool(a), TypedValue::Bool(b)) => Some(a.cmp(b)),
            (TypedValue::Date(a), TypedValue::Date(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }

    pub fn same_kind(&self, other: &TypedValue) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }

    /// JSON rendering. Dates become ISO-8601 strings.
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::Value;
        match self {
            TypedValue::Str(s) => Value::String(s.clone()),
            TypedValue::Num(n) => serde_json::Number::from_f64(*n)
                .map(|n| {
                    // integral values print without a trailing ".0"
                    if n.as_f64().is_some_and(|f| f.fract() == 0.0 && f.abs() < 9.0e15) {
                        Value::Number((n.as_f64().unwrap() as i64).into())
                    } else {
                        Value::Number(n)
                    }
                })
                .unwrap_or(Value::Null),
            TypedValue::Bool(b) => Value::Bool(*b),
            TypedValue::Date(d) => Value::String(d.format("%Y-%m-%d").to_string()),
            TypedValue::List(items) => Value::Array(items.iter().map(TypedValue::to_json).collect()),
            TypedValue::Record(fields) => Value::Object(
                fields
                    .iter()
                    .map(|(k, v)| (k.clone(), v.to_json()))
                    .collect(),
            ),
        }
    }

    /// Converts JSON into a value. `null` has no counterpart and yields `None`;
    /// nulls nested in arrays or objects are dropped.
    pub fn from_json(value: &serde_json::Value) -> Option<TypedValue> {
        use serde_json::Value;
        Some(match value {
            Value::Null => return None,
            Value::Bool(b) => TypedValue::Bool(*b),
            Value::Number(n) => TypedValue::Num(n.as_f64()?),
            Value::String(s) => TypedValue::Str(s.clone()),
            Value::Array(items) => TypedValue::List(items.iter().filter_map(TypedValue::from_json).collect()),
            Value::Object(map) => TypedValue::Record(
                map.iter()
                    .filter_map(|(k, v)| TypedValue::from_json(v).map(|v| (k.clone(), v)))
                    .collect(),
            ),
        })
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            TypedValue::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            TypedValue::Num(n) => Some(*n),
            _ => None,
        }
    }
}

impl fmt::Display for TypedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypedValue::Str(s) => f.write_str(s),
            TypedValue::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
            other => write!(f, "{}", other.to_json()),
        }
    }
}

// Hash is used for working-memory fingerprints only; floats hash by bit pattern.
impl Hash for TypedValue {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            TypedValue::Str(s) => s.hash(state),
            TypedValue::Num(n) => n.to_bits().hash(state),
            TypedValue::Bool(b) => b.hash(state),
            TypedValue::Date(d) => d.hash(state),
            TypedValue::List(items) => items.hash(state),
            TypedValue::Record(fields) => fields.hash(state),
        }
    }
}

impl Serialize for TypedValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TypedValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = serde_json::Value::deserialize(deserializer)?;
        TypedValue::from_json(&raw).ok_or_else(|| serde::de::Error::custom("null is not a value"))
    }
}

impl From<&str> for TypedValue {
    fn from(s: &str) -> Self {
        TypedValue::Str(s.to_string())
    }
}

impl From<String> for TypedValue {
    fn from(s: String) -> Self {
        TypedValue::Str(s)
    }
}

impl From<f64> for TypedValue {
    fn from(n: f64) -> Self {
        TypedValue::Num(n)
    }
}

impl From<i64> for TypedValue {
    fn from(n: i64) -> Self {
        TypedValue::Num(n as f64)
    }
}

impl From<bool> for TypedValue {
    fn from(b: bool) -> Self {
        TypedValue::Bool(b)
    }
}

impl From<NaiveDate> for TypedValue {
    fn from(d: NaiveDate) -> Self {
        TypedValue::Date(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integral_numbers_render_without_fraction() {
        assert_eq!(TypedValue::Num(70000.0).to_json().to_string(), "70000");
        assert_eq!(TypedValue::Num(0.5).to_json().to_string(), "0.5");
    }

    #[test]
    fn dates_render_iso() {
        let d = NaiveDate::from_ymd_opt(2024, 9, 29).unwrap();
        assert_eq!(TypedValue::Date(d).to_json(), serde_json::json!("2024-09-29"));
    }

    #[test]
    fn cross_kind_has_no_order() {
        assert_eq!(TypedValue::from("a").partial_order(&TypedValue::Num(0.0)), None);
        assert_eq!(
            TypedValue::Num(1.0).partial_order(&TypedValue::Num(0.0)),
            Some(Ordering::Greater)
        );
    }
}
