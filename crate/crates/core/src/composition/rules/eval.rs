use std::cmp::Ordering;

use thiserror::Error;

use super::{ArithOp, CmpOp, Expr};
use crate::composition::WorkingMemory;
use crate::value::TypedValue;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("type error: cannot apply `{op}` to {left} and {right}")]
    Type {
        op: &'static str,
        left: &'static str,
        right: &'static str,
    },
    #[error("type error: expected a boolean, found {0}")]
    NotBoolean(&'static str),
    #[error("`results` used before any invoke")]
    UnboundResults,
}

/// Evaluates `expr` to a value; `None` stands for null or an absent key.
pub fn eval_expr(expr: &Expr, wm: &WorkingMemory, results: Option<&TypedValue>) -> Result<Option<TypedValue>, EvalError> {
    Ok(match expr {
        Expr::Literal(v) => Some(v.clone()),
        Expr::Null => None,
        Expr::WmGet(k) => wm.get(k).cloned(),
        Expr::Results => Some(results.cloned().ok_or(EvalError::UnboundResults)?),
        Expr::Not(_) | Expr::And(..) | Expr::Or(..) | Expr::Cmp(..) => {
            Some(TypedValue::Bool(eval_bool(expr, wm, results)?))
        }
        Expr::Arith(op, a, b) => {
            let (Some(x), Some(y)) = (eval_expr(a, wm, results)?, eval_expr(b, wm, results)?) else {
                return Ok(None);
            };
            Some(match (op, x, y) {
                (ArithOp::Add, TypedValue::Num(x), TypedValue::Num(y)) => TypedValue::Num(x + y),
                (ArithOp::Sub, TypedValue::Num(x), TypedValue::Num(y)) => TypedValue::Num(x - y),
                (ArithOp::Add, TypedValue::Str(x), TypedValue::Str(y)) => TypedValue::Str(x + &y),
                (op, x, y) => {
                    return Err(EvalError::Type {
                        op: if *op == ArithOp::Add { "+" } else { "-" },
                        left: x.kind_name(),
                        right: y.kind_name(),
                    })
                }
            })
        }
    })
}

fn truthy(v: Option<TypedValue>) -> Result<bool, EvalError> {
    match v {
        None => Ok(false),
        Some(TypedValue::Bool(b)) => Ok(b),
        Some(other) => Err(EvalError::NotBoolean(other.kind_name())),
    }
}

fn compare(op: CmpOp, a: &Expr, b: &Expr, wm: &WorkingMemory, results: Option<&TypedValue>) -> Result<bool, EvalError> {
    // `x == null` / `x != null` test presence
    if matches!(a, Expr::Null) || matches!(b, Expr::Null) {
        let other = if matches!(a, Expr::Null) { b } else { a };
        let present = eval_expr(other, wm, results)?.is_some();
        return Ok(match op {
            CmpOp::Eq => !present,
            CmpOp::Ne => present,
            _ => false,
        });
    }
    let (Some(x), Some(y)) = (eval_expr(a, wm, results)?, eval_expr(b, wm, results)?) else {
        return Ok(false);
    };
    let mismatch = || EvalError::Type {
        op: op.symbol(),
        left: x.kind_name(),
        right: y.kind_name(),
    };
    if !x.same_kind(&y) {
        return Err(mismatch());
    }
    Ok(match op {
        CmpOp::Eq => x == y,
        CmpOp::Ne => x != y,
        _ => {
            let ord = x.partial_order(&y).ok_or_else(mismatch)?;
            match op {
                CmpOp::Lt => ord == Ordering::Less,
                CmpOp::Le => ord != Ordering::Greater,
                CmpOp::Gt => ord == Ordering::Greater,
                _ => ord != Ordering::Less,
            }
        }
    })
}

fn eval_bool(expr: &Expr, wm: &WorkingMemory, results: Option<&TypedValue>) -> Result<bool, EvalError> {
    match expr {
        Expr::Not(a) => Ok(!eval_bool(a, wm, results)?),
        Expr::And(a, b) => Ok(eval_bool(a, wm, results)? && eval_bool(b, wm, results)?),
        Expr::Or(a, b) => Ok(eval_bool(a, wm, results)? || eval_bool(b, wm, results)?),
        Expr::Cmp(op, a, b) => compare(*op, a, b, wm, results),
        other => truthy(eval_expr(other, wm, results)?),
    }
}

/// Evaluates a rule condition without touching working memory.
pub fn eval_condition(expr: &Expr, wm: &WorkingMemory) -> Result<bool, EvalError> {
    eval_bool(expr, wm, None)
}
