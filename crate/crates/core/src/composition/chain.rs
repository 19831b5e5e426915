//! Chain rules derived from method signatures: a method fires once all of
//! its argument keys are in working memory and stores its result under its
//! returns key.

use std::collections::BTreeSet;

use super::rules::{Action, CompositionalRule, Expr};
use crate::registry::{AbstractServiceDescriptor, MethodDescriptor, RegistrySnapshot};
use crate::value::TypedValue;

/// Working-memory key an argument is read from. An argument named after a
/// known returns key reads that result directly (`selectedFlights`);
/// otherwise the `<service>.<method>.<arg>` convention applies.
pub fn arg_key(service_id: &str, method_id: &str, arg: &str, returns_keys: &BTreeSet<String>) -> String {
    if returns_keys.contains(arg) {
        arg.to_string()
    } else {
        format!("{service_id}.{method_id}.{arg}")
    }
}

pub fn rule_name(service_id: &str, method_id: &str) -> String {
    format!("chain-{service_id}-{method_id}")
}

pub fn returns_keys<'a>(services: impl IntoIterator<Item = &'a AbstractServiceDescriptor>) -> BTreeSet<String> {
    services
        .into_iter()
        .flat_map(|s| s.methods.iter().map(|m| m.returns_key.clone()))
        .collect()
}

pub(crate) fn chain_rule(service_id: &str, method: &MethodDescriptor, keys: &BTreeSet<String>) -> CompositionalRule {
    let when = method
        .args
        .iter()
        .map(|a| Expr::not_null(arg_key(service_id, &method.method_id, &a.name, keys)))
        .reduce(Expr::and)
        .unwrap_or(Expr::Literal(TypedValue::Bool(true)));
    CompositionalRule::new(
        rule_name(service_id, &method.method_id),
        method.capabilities.first().cloned().unwrap_or_default(),
        when,
        vec![
            Action::Invoke {
                service_id: service_id.to_string(),
                method_id: method.method_id.clone(),
            },
            Action::Put(method.returns_key.clone(), Expr::Results),
        ],
    )
}

/// One chain rule per method of `service`, linking through the service's own
/// returns keys.
pub fn derive_chain_rules(service: &AbstractServiceDescriptor) -> Vec<CompositionalRule> {
    let keys = returns_keys([service]);
    service
        .methods
        .iter()
        .map(|m| chain_rule(&service.service_id, m, &keys))
        .collect()
}

/// Chain rules for every registered method, linking across services.
pub fn derive_registry_rules(snapshot: &RegistrySnapshot) -> Vec<CompositionalRule> {
    let keys = returns_keys(snapshot.abstracts.values());
    snapshot
        .abstracts
        .values()
        .flat_map(|s| s.methods.iter().map(|m| chain_rule(&s.service_id, m, &keys)))
        .collect()
}
