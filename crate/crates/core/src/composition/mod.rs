//! Working memory, compositional rules, forward chaining, QoS-aware
//! selection and plan execution.

mod chain;
mod executor;
mod firing;
mod plan;
mod qos;
mod rules;
mod wm;

pub use chain::{arg_key, derive_chain_rules, derive_registry_rules, returns_keys, rule_name};
pub use executor::{
    ExecError, ExecutionRequest, ExecutionResponse, Executor, ExecutorSet, MockExecutor, DEFAULT_TIMEOUT,
};
pub use firing::{fire_rules, FireError, Firing, FiringStatus, FiringTrace, Invoker, SkippedRule, DEFAULT_ITERATION_CAP};
pub use plan::{execute_plan, generate_plan, generate_plan_with_keys, CompositionPlan, ExecutionReport, PlanError, PlanStep, StepReport, StepStatus};
pub use qos::{select_concrete, DeviceContext, QosError};
pub use rules::{
    eval_condition, eval_expr, parse_rule, parse_rules, Action, ArithOp, CmpOp, CompositionalRule, EvalError, Expr,
    RuleSyntaxError,
};
pub use wm::{AuditEntry, WmOp, WorkingMemory};
