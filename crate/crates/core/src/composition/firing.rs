//! Forward chaining to quiescence.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::rules::{eval_condition, eval_expr, Action, CompositionalRule};
use super::wm::{AuditEntry, WorkingMemory};
use crate::value::TypedValue;

pub const DEFAULT_ITERATION_CAP: usize = 100;

/// Runs the `invoke(S.m)` action of a rule.
pub trait Invoker {
    fn invoke(&mut self, service_id: &str, method_id: &str, wm: &WorkingMemory) -> Result<TypedValue, String>;
}

impl<F> Invoker for F
where
    F: FnMut(&str, &str, &WorkingMemory) -> Result<TypedValue, String>,
{
    fn invoke(&mut self, service_id: &str, method_id: &str, wm: &WorkingMemory) -> Result<TypedValue, String> {
        self(service_id, method_id, wm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FiringStatus {
    Fired,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Firing {
    pub pass: usize,
    pub rule: String,
    pub status: FiringStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Working-memory changes made by this firing.
    pub delta: Vec<AuditEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedRule {
    pub pass: usize,
    pub rule: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FiringTrace {
    pub firings: Vec<Firing>,
    /// Rules whose condition raised an evaluation error.
    pub skipped: Vec<SkippedRule>,
    pub passes: usize,
}

impl FiringTrace {
    pub fn fired_rules(&self) -> impl Iterator<Item = &str> {
        self.firings.iter().map(|f| f.rule.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FireError {
    #[error("no quiescence after {cap} passes; the rules probably form a cycle")]
    IterationCapExceeded { cap: usize, trace: Box<FiringTrace> },
    #[error("duplicate rule name `{0}`")]
    DuplicateRule(String),
}

fn run_actions(
    rule: &CompositionalRule,
    wm: &mut WorkingMemory,
    invoker: &mut dyn Invoker,
) -> Result<(), String> {
    let mut results: Option<TypedValue> = None;
    for action in &rule.then {
        match action {
            Action::Invoke { service_id, method_id } => {
                results = Some(invoker.invoke(service_id, method_id, wm)?);
            }
            Action::Put(key, expr) => {
                let value = eval_expr(expr, wm, results.as_ref())
                    .map_err(|e| e.to_string())?
                    .ok_or_else(|| format!("cannot put null under `{key}`"))?;
                wm.put(key.clone(), value, &rule.name);
            }
            Action::Remove(key) => {
                wm.remove(key, &rule.name);
            }
        }
    }
    Ok(())
}

/// Evaluates all rules pass after pass, in priority then name order, firing
/// each rule whose condition holds on inputs it has not fired on before.
/// Stops after a pass with no firing. Firing history stays on the rules, so a
/// second call on an unchanged memory fires nothing.
pub fn fire_rules(
    rules: &mut [CompositionalRule],
    wm: &mut WorkingMemory,
    invoker: &mut dyn Invoker,
    cap: usize,
) -> Result<FiringTrace, FireError> {
    let mut names = BTreeSet::new();
    for r in rules.iter() {
        if !names.insert(r.name.as_str()) {
            return Err(FireError::DuplicateRule(r.name.clone()));
        }
    }
    let mut order: Vec<usize> = (0..rules.len()).collect();
    order.sort_by(|&a, &b| {
        rules[b]
            .priority
            .cmp(&rules[a].priority)
            .then_with(|| rules[a].name.cmp(&rules[b].name))
    });

    let mut trace = FiringTrace::default();
    loop {
        if trace.passes == cap {
            return Err(FireError::IterationCapExceeded {
                cap,
                trace: Box::new(trace),
            });
        }
        trace.passes += 1;
        let pass = trace.passes;
        let mut fired = 0;
        for &i in &order {
            let rule = &rules[i];
            match eval_condition(&rule.when, wm) {
                Err(e) => {
                    tracing::debug!(rule = %rule.name, error = %e, "rule skipped");
                    trace.skipped.push(SkippedRule {
                        pass,
                        rule: rule.name.clone(),
                        error: e.to_string(),
                    });
                    continue;
                }
                Ok(false) => continue,
                Ok(true) => {}
            }
            let fingerprint = wm.fingerprint(rule.when.read_keys());
            if rule.fired_at.contains(&fingerprint) {
                continue;
            }
            let before = wm.audit().len();
            let outcome = run_actions(rule, wm, invoker);
            let rule = &mut rules[i];
            rule.fired_at.insert(fingerprint);
            rule.fired_count += 1;
            fired += 1;
            trace.firings.push(Firing {
                pass,
                rule: rule.name.clone(),
                status: if outcome.is_ok() { FiringStatus::Fired } else { FiringStatus::Failed },
                error: outcome.err(),
                delta: wm.audit()[before..].to_vec(),
            });
        }
        if fired == 0 {
            return Ok(trace);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composition::parse_rules;

    fn no_invoke(_: &str, _: &str, _: &WorkingMemory) -> Result<TypedValue, String> {
        Err("unexpected invoke".into())
    }

    #[test]
    fn search_then_book_chain() {
        let mut rules = parse_rules(
            "rule rule-search-flights
             when wm.get('flight.destination') != null
             then invoke(FlightReservation.searchFlight)
             then wm.put('selectedFlights', results)
             rule rule-book-flight
             when wm.get('selectedFlights') != null
             then invoke(FlightReservation.bookFlight)
             then wm.put('bookedFlight', results)",
        )
        .unwrap();
        let mut wm = WorkingMemory::new();
        wm.put("flight.destination", "Paris".into(), "user");
        let mut calls = Vec::new();
        let mut invoker = |s: &str, m: &str, _: &WorkingMemory| {
            calls.push(format!("{s}.{m}"));
            Ok(TypedValue::from(format!("{m}-result")))
        };
        let trace = fire_rules(&mut rules, &mut wm, &mut invoker, DEFAULT_ITERATION_CAP).unwrap();
        assert_eq!(calls, ["FlightReservation.searchFlight", "FlightReservation.bookFlight"]);
        // book is evaluated before search by name, so it fires in the second pass
        assert_eq!(trace.firings[0].pass, 1);
        assert_eq!(trace.firings[1].pass, 2);
        assert_eq!(trace.passes, 3);
        assert_eq!(wm.get("bookedFlight"), Some(&TypedValue::from("bookFlight-result")));
    }

    #[test]
    fn empty_rule_set() {
        let trace = fire_rules(&mut [], &mut WorkingMemory::new(), &mut no_invoke, 100).unwrap();
        assert!(trace.firings.is_empty());
    }

    #[test]
    fn same_value_put_fires_once() {
        let mut rules = parse_rules("rule r when wm.get('k') != null then wm.put('k', 1)").unwrap();
        let mut wm = WorkingMemory::new();
        wm.put("k", TypedValue::Num(1.0), "user");
        let trace = fire_rules(&mut rules, &mut wm, &mut no_invoke, 100).unwrap();
        assert_eq!(trace.firings.len(), 1);
        assert_eq!(trace.passes, 2);
        let again = fire_rules(&mut rules, &mut wm, &mut no_invoke, 100).unwrap();
        assert!(again.firings.is_empty());
    }

    #[test]
    fn counting_cycle_hits_the_cap() {
        let mut rules = parse_rules("rule r when wm.get('n') != null then wm.put('n', wm.get('n') + 1)").unwrap();
        let mut wm = WorkingMemory::new();
        wm.put("n", TypedValue::Num(0.0), "user");
        let err = fire_rules(&mut rules, &mut wm, &mut no_invoke, 10).unwrap_err();
        assert!(matches!(err, FireError::IterationCapExceeded { cap: 10, .. }));
        assert_eq!(wm.get("n"), Some(&TypedValue::Num(10.0)));
    }

    #[test]
    fn bounded_counter_reaches_quiescence() {
        let mut rules = parse_rules("rule r when wm.get('n') < 5 then wm.put('n', wm.get('n') + 1)").unwrap();
        let mut wm = WorkingMemory::new();
        wm.put("n", TypedValue::Num(0.0), "user");
        let trace = fire_rules(&mut rules, &mut wm, &mut no_invoke, 100).unwrap();
        assert_eq!(trace.firings.len(), 5);
        assert_eq!(rules[0].fired_count, 5);
    }

    #[test]
    fn failed_action_is_recorded_and_chaining_continues() {
        let mut rules = parse_rules(
            "rule a when true then invoke(S.broken) then wm.put('never', results)
             rule b when true then wm.put('ok', true)",
        )
        .unwrap();
        let mut wm = WorkingMemory::new();
        let trace = fire_rules(&mut rules, &mut wm, &mut no_invoke, 100).unwrap();
        assert_eq!(trace.firings[0].status, FiringStatus::Failed);
        assert_eq!(trace.firings[1].status, FiringStatus::Fired);
        assert!(wm.get("never").is_none());
        assert_eq!(wm.get("ok"), Some(&TypedValue::Bool(true)));
    }

    #[test]
    fn type_errors_skip_the_rule() {
        let mut rules = parse_rules("rule r when wm.get('k') > 0 then wm.put('x', 1)").unwrap();
        let mut wm = WorkingMemory::new();
        wm.put("k", "a".into(), "user");
        let trace = fire_rules(&mut rules, &mut wm, &mut no_invoke, 100).unwrap();
        assert!(trace.firings.is_empty());
        assert_eq!(trace.skipped.len(), 1);
        assert!(wm.get("x").is_none());
    }

    #[test]
    fn priority_beats_name() {
        let mut rules = parse_rules(
            "rule a when true then wm.put('order', 'a')
             rule z priority 1 when true then wm.put('order', 'z')",
        )
        .unwrap();
        let mut wm = WorkingMemory::new();
        let trace = fire_rules(&mut rules, &mut wm, &mut no_invoke, 100).unwrap();
        assert_eq!(trace.fired_rules().collect::<Vec<_>>(), ["z", "a"]);
    }

    #[test]
    fn duplicate_names_rejected() {
        let rule = crate::composition::parse_rule("rule a when true then wm.remove('x')").unwrap();
        let mut rules = vec![rule.clone(), rule];
        assert_eq!(
            fire_rules(&mut rules, &mut WorkingMemory::new(), &mut no_invoke, 100),
            Err(FireError::DuplicateRule("a".into()))
        );
    }
}
