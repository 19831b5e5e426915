//! Plan generation from chain rules and plan execution.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::chain::{arg_key, chain_rule, returns_keys};
use super::executor::{ExecutionRequest, ExecutorSet};
use super::firing::{fire_rules, FireError};
use super::qos::{select_concrete, DeviceContext};
use super::rules::{eval_condition, CompositionalRule};
use super::wm::WorkingMemory;
use crate::entities::{ArgBinding, BindingSource, BoundArg};
use crate::registry::{lookup_concretes, ConcreteServiceDescriptor, RegistrySnapshot};
use crate::value::TypedValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum StepStatus {
    Pending,
    Ready,
    Executed,
    Failed,
}

impl StepStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            StepStatus::Pending => "PENDING",
            StepStatus::Ready => "READY",
            StepStatus::Executed => "EXECUTED",
            StepStatus::Failed => "FAILED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub service_id: String,
    pub method_id: String,
    pub concrete: Option<ConcreteServiceDescriptor>,
    /// Why no concrete could be chosen.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concrete_error: Option<String>,
    /// (argument, working-memory key) in declaration order.
    pub arg_keys: Vec<(String, String)>,
    pub returns_key: String,
    pub binding: ArgBinding,
    pub status: StepStatus,
    /// Indices of steps producing this step's inputs.
    pub depends_on: Vec<usize>,
    pub rule: CompositionalRule,
}

impl PlanStep {
    pub fn qualified_name(&self) -> String {
        format!("{}.{}", self.service_id, self.method_id)
    }

    fn rebind(&mut self, wm: &WorkingMemory) {
        let mut binding = ArgBinding::default();
        for (arg, key) in &self.arg_keys {
            match wm.get(key) {
                Some(v) => {
                    binding.bound.insert(
                        arg.clone(),
                        BoundArg {
                            value: v.clone(),
                            source: BindingSource::Wm,
                            entity_index: None,
                        },
                    );
                }
                None => binding.unresolved.push(arg.clone()),
            }
        }
        self.binding = binding;
    }

    fn ready(&self, wm: &WorkingMemory) -> bool {
        self.binding.is_complete() && eval_condition(&self.rule.when, wm) == Ok(true)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CompositionPlan {
    pub steps: Vec<PlanStep>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("unknown method `{0}.{1}`")]
    UnknownMethod(String, String),
    #[error(transparent)]
    Fire(#[from] FireError),
}

/// Methods reachable from the start method through returns keys, start first.
fn downstream(snapshot: &RegistrySnapshot, start: (&str, &str), keys: &BTreeSet<String>) -> Vec<(String, String)> {
    let mut members = vec![(start.0.to_string(), start.1.to_string())];
    let mut produced: BTreeSet<String> = snapshot
        .method(start.0, start.1)
        .map(|m| m.returns_key.clone())
        .into_iter()
        .collect();
    loop {
        let mut grew = false;
        for service in snapshot.abstracts.values() {
            for method in &service.methods {
                if members.iter().any(|(s, m)| *s == service.service_id && *m == method.method_id) {
                    continue;
                }
                let consumes = method
                    .args
                    .iter()
                    .any(|a| produced.contains(&arg_key(&service.service_id, &method.method_id, &a.name, keys)));
                if consumes {
                    produced.insert(method.returns_key.clone());
                    members.push((service.service_id.clone(), method.method_id.clone()));
                    grew = true;
                }
            }
        }
        if !grew {
            return members;
        }
    }
}

/// Builds the plan for a selected method and everything its result feeds.
/// Step order comes from a dry run of the chain rules on a copy of `wm` in
/// which earlier results of the plan's methods are cleared. Each step gets
/// the concrete service chosen for `context`.
pub fn generate_plan(
    snapshot: &RegistrySnapshot,
    service_id: &str,
    method_id: &str,
    wm: &WorkingMemory,
    context: &DeviceContext,
    iteration_cap: usize,
) -> Result<CompositionPlan, PlanError> {
    let keys = returns_keys(snapshot.abstracts.values());
    generate_plan_with_keys(snapshot, &keys, service_id, method_id, wm, context, iteration_cap)
}

/// [`generate_plan`] with the snapshot's [`returns_keys`] computed by the caller.
pub fn generate_plan_with_keys(
    snapshot: &RegistrySnapshot,
    keys: &BTreeSet<String>,
    service_id: &str,
    method_id: &str,
    wm: &WorkingMemory,
    context: &DeviceContext,
    iteration_cap: usize,
) -> Result<CompositionPlan, PlanError> {
    if snapshot.method(service_id, method_id).is_none() {
        return Err(PlanError::UnknownMethod(service_id.into(), method_id.into()));
    }
    let members = downstream(snapshot, (service_id, method_id), keys);

    let mut rules: Vec<CompositionalRule> = members
        .iter()
        .map(|(s, m)| chain_rule(s, snapshot.method(s, m).expect("member methods exist"), keys))
        .collect();
    let mut dry = wm.clone();
    for (s, m) in &members {
        let key = &snapshot.method(s, m).expect("member methods exist").returns_key;
        if dry.contains(key) {
            dry.remove(key, "plan");
        }
    }
    let mut order: Vec<(String, String)> = Vec::new();
    let mut record = |s: &str, m: &str, _: &WorkingMemory| {
        let id = (s.to_string(), m.to_string());
        if !order.contains(&id) {
            order.push(id);
        }
        Ok(TypedValue::from(format!("planned:{s}.{m}")))
    };
    fire_rules(&mut rules, &mut dry, &mut record, iteration_cap)?;
    for id in &members {
        if !order.contains(id) {
            order.push(id.clone());
        }
    }

    let mut steps: Vec<PlanStep> = Vec::new();
    for (s, m) in &order {
        let method = snapshot.method(s, m).expect("member methods exist");
        let (concrete, concrete_error) = match lookup_concretes(snapshot, s)
            .map_err(|e| e.to_string())
            .and_then(|cs| select_concrete(&cs, m, context).map_err(|e| e.to_string()))
        {
            Ok(c) => (Some(c.clone()), None),
            Err(e) => (None, Some(e)),
        };
        let mut step = PlanStep {
            service_id: s.clone(),
            method_id: m.clone(),
            concrete,
            concrete_error,
            arg_keys: method
                .args
                .iter()
                .map(|a| (a.name.clone(), arg_key(s, m, &a.name, keys)))
                .collect(),
            returns_key: method.returns_key.clone(),
            binding: ArgBinding::default(),
            status: StepStatus::Pending,
            depends_on: Vec::new(),
            rule: chain_rule(s, method, keys),
        };
        step.rebind(wm);
        if step.ready(wm) {
            step.status = StepStatus::Ready;
        }
        steps.push(step);
    }
    for j in 0..steps.len() {
        let inputs: BTreeSet<&str> = steps[j].arg_keys.iter().map(|(_, k)| k.as_str()).collect();
        let deps: Vec<usize> = (0..steps.len())
            .filter(|&i| i != j && inputs.contains(steps[i].returns_key.as_str()))
            .collect();
        steps[j].depends_on = deps;
    }
    Ok(CompositionPlan { steps })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub service_id: String,
    pub method_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concrete_id: Option<String>,
    pub status: StepStatus,
    pub args: BTreeMap<String, TypedValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<TypedValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Why a pending step did not run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocked_by: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub steps: Vec<StepReport>,
}

impl ExecutionReport {
    pub fn status_of(&self, method_id: &str) -> Option<StepStatus> {
        self.steps.iter().find(|s| s.method_id == method_id).map(|s| s.status)
    }

    /// Copy without durations, for replies that must replay identically.
    pub fn without_timings(&self) -> ExecutionReport {
        let mut out = self.clone();
        for s in &mut out.steps {
            s.duration_ms = None;
        }
        out
    }
}

/// Runs the plan's steps in order. A step runs once its inputs are in
/// working memory and the steps it depends on have executed; its result is
/// stored under its returns key. Failures leave dependents pending.
pub fn execute_plan(plan: &mut CompositionPlan, wm: &mut WorkingMemory, executors: &ExecutorSet) -> ExecutionReport {
    let mut report = ExecutionReport::default();
    for i in 0..plan.steps.len() {
        let waiting_on = plan.steps[i]
            .depends_on
            .iter()
            .map(|&d| &plan.steps[d])
            .find(|d| d.status != StepStatus::Executed)
            .map(|d| format!("{} ({})", d.qualified_name(), d.status.as_str()));
        let step = &mut plan.steps[i];
        step.rebind(wm);
        let mut entry = StepReport {
            service_id: step.service_id.clone(),
            method_id: step.method_id.clone(),
            concrete_id: step.concrete.as_ref().map(|c| c.concrete_id.clone()),
            status: StepStatus::Pending,
            args: step.binding.values(),
            result: None,
            error: None,
            blocked_by: None,
            duration_ms: None,
        };
        if let Some(dep) = waiting_on {
            step.status = StepStatus::Pending;
            entry.blocked_by = Some(format!("waiting for {dep}"));
            report.steps.push(entry);
            continue;
        }
        if !step.ready(wm) {
            step.status = StepStatus::Pending;
            entry.blocked_by = Some(format!("missing arguments: {}", step.binding.unresolved.join(", ")));
            report.steps.push(entry);
            continue;
        }
        step.status = StepStatus::Ready;
        let Some(concrete) = step.concrete.clone() else {
            step.status = StepStatus::Failed;
            entry.status = StepStatus::Failed;
            entry.error = step.concrete_error.clone();
            report.steps.push(entry);
            continue;
        };
        let request = ExecutionRequest {
            concrete_id: concrete.concrete_id.clone(),
            method_id: step.method_id.clone(),
            args: step.binding.values(),
        };
        let started = Instant::now();
        let outcome = executors.execute(&concrete.executor_binding, &request);
        entry.duration_ms = Some(started.elapsed().as_secs_f64() * 1000.0);
        match outcome {
            Ok(value) => {
                wm.put(step.returns_key.clone(), value.clone(), &format!("{}.{}", concrete.concrete_id, step.method_id));
                step.status = StepStatus::Executed;
                entry.result = Some(value);
            }
            Err(e) => {
                step.status = StepStatus::Failed;
                entry.error = Some(e.to_string());
            }
        }
        entry.status = step.status;
        report.steps.push(entry);
    }
    report
}
