//! Compositional rules: a small when/then language over working memory.

mod eval;
mod parser;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::TypedValue;

pub use eval::{eval_condition, eval_expr, EvalError};
pub use parser::{parse_rule, parse_rules};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {reason}")]
pub struct RuleSyntaxError {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArithOp {
    Add,
    Sub,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Literal(TypedValue),
    Null,
    WmGet(String),
    /// Result of the latest `invoke` in the same rule.
    Results,
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn and(self, other: Expr) -> Expr {
        Expr::And(Box::new(self), Box::new(other))
    }

    pub fn not_null(key: impl Into<String>) -> Expr {
        Expr::Cmp(CmpOp::Ne, Box::new(Expr::WmGet(key.into())), Box::new(Expr::Null))
    }

    /// Working-memory keys the expression reads, in first-appearance order.
    pub fn read_keys(&self) -> Vec<&str> {
        fn walk<'a>(e: &'a Expr, out: &mut Vec<&'a str>) {
            match e {
                Expr::WmGet(k) => {
                    if !out.contains(&k.as_str()) {
                        out.push(k);
                    }
                }
                Expr::Not(a) => walk(a, out),
                Expr::And(a, b) | Expr::Or(a, b) | Expr::Cmp(_, a, b) | Expr::Arith(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                Expr::Literal(_) | Expr::Null | Expr::Results => {}
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }
}

fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\\', "\\\\").replace('\'', "\\'"))
}

fn fmt_literal(v: &TypedValue, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match v {
        TypedValue::Str(s) => f.write_str(&quote(s)),
        TypedValue::Num(n) => write!(f, "{}", TypedValue::Num(*n)),
        TypedValue::Bool(b) => write!(f, "{b}"),
        // dates and composites have no literal syntax; render as strings
        other => f.write_str(&quote(&other.to_string())),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Literal(v) => fmt_literal(v, f),
            Expr::Null => f.write_str("null"),
            Expr::WmGet(k) => write!(f, "wm.get({})", quote(k)),
            Expr::Results => f.write_str("results"),
            Expr::Not(a) => write!(f, "!({a})"),
            Expr::And(a, b) => write!(f, "({a} && {b})"),
            Expr::Or(a, b) => write!(f, "({a} || {b})"),
            Expr::Cmp(op, a, b) => {
                let side = |e: &Expr| match e {
                    Expr::Cmp(..) => format!("({e})"),
                    _ => e.to_string(),
                };
                write!(f, "{} {} {}", side(a), op.symbol(), side(b))
            }
            Expr::Arith(op, a, b) => {
                let sym = if *op == ArithOp::Add { "+" } else { "-" };
                write!(f, "({a} {sym} {b})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Action {
    Put(String, Expr),
    Remove(String),
    Invoke { service_id: String, method_id: String },
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Put(k, e) => write!(f, "wm.put({}, {e})", quote(k)),
            Action::Remove(k) => write!(f, "wm.remove({})", quote(k)),
            Action::Invoke { service_id, method_id } => write!(f, "invoke({service_id}.{method_id})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionalRule {
    pub name: String,
    pub description: String,
    pub priority: i64,
    pub when: Expr,
    pub then: Vec<Action>,
    pub fired_count: u64,
    /// Fingerprints of the condition's inputs at each firing.
    #[serde(skip)]
    pub(crate) fired_at: BTreeSet<u64>,
}

impl CompositionalRule {
    pub fn new(name: impl Into<String>, description: impl Into<String>, when: Expr, then: Vec<Action>) -> Self {
        CompositionalRule {
            name: name.into(),
            description: description.into(),
            priority: 0,
            when,
            then,
            fired_count: 0,
            fired_at: BTreeSet::new(),
        }
    }

    pub fn with_priority(mut self, priority: i64) -> Self {
        self.priority = priority;
        self
    }

    /// Forgets firing history so the rule may fire again on states it has
    /// already seen.
    pub fn reset(&mut self) {
        self.fired_count = 0;
        self.fired_at.clear();
    }

    /// Services invoked by the rule's actions.
    pub fn invocations(&self) -> impl Iterator<Item = (&str, &str)> {
        self.then.iter().filter_map(|a| match a {
            Action::Invoke { service_id, method_id } => Some((service_id.as_str(), method_id.as_str())),
            _ => None,
        })
    }
}

impl fmt::Display for CompositionalRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {}", self.name)?;
        if self.priority != 0 {
            write!(f, " priority {}", self.priority)?;
        }
        writeln!(f)?;
        if !self.description.is_empty() {
            writeln!(f, "desc \"{}\"", self.description.replace('\\', "\\\\").replace('"', "\\\""))?;
        }
        writeln!(f, "when {}", self.when)?;
        for action in &self.then {
            writeln!(f, "then {action}")?;
        }
        Ok(())
    }
}
