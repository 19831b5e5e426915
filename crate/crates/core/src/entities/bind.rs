use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{extract_nouns, Entity, EntityKind, SynonymTable};
use crate::composition::WorkingMemory;
use crate::registry::{ArgDescriptor, MethodDescriptor};
use crate::value::TypedValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BindingSource {
    Wm,
    Entity,
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundArg {
    pub value: TypedValue,
    pub source: BindingSource,
    /// Index into the entity list for entity bindings.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entity_index: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ArgBinding {
    pub bound: BTreeMap<String, BoundArg>,
    /// Unbound args in declaration order.
    pub unresolved: Vec<String>,
    /// Subset of `unresolved` where several entities competed and nothing
    /// decided between them.
    pub ambiguous: Vec<String>,
}

impl ArgBinding {
    pub fn is_complete(&self) -> bool {
        self.unresolved.is_empty()
    }

    /// Binds an unresolved arg to a user-supplied value.
    pub fn bind_user(&mut self, name: &str, value: TypedValue) -> bool {
        let Some(pos) = self.unresolved.iter().position(|n| n == name) else {
            return false;
        };
        self.unresolved.remove(pos);
        self.ambiguous.retain(|n| n != name);
        self.bound.insert(
            name.to_string(),
            BoundArg {
                value,
                source: BindingSource::User,
                entity_index: None,
            },
        );
        true
    }

    pub fn values(&self) -> BTreeMap<String, TypedValue> {
        self.bound.iter().map(|(k, b)| (k.clone(), b.value.clone())).collect()
    }
}

/// Lowercased words of a camel-case identifier: `FlightReservation` → flight, reservation.
pub(crate) fn camel_words(id: &str) -> Vec<String> {
    let mut words = Vec::new();
    let mut current = String::new();
    let chars: Vec<char> = id.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        let boundary = c.is_uppercase()
            && !current.is_empty()
            && (chars[i - 1].is_lowercase() || chars.get(i + 1).is_some_and(|n| n.is_lowercase()));
        if boundary || c == '_' {
            if !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
            if c == '_' {
                continue;
            }
        }
        current.extend(c.to_lowercase());
    }
    if !current.is_empty() {
        words.push(current);
    }
    words
}

/// Working-memory keys consulted for an argument, most specific convention last.
pub fn wm_lookup_keys(service_id: &str, method_id: &str, arg: &str) -> Vec<String> {
    let mut keys = vec![arg.to_string(), format!("{service_id}.{method_id}.{arg}")];
    for word in camel_words(service_id).into_iter().chain(camel_words(method_id)) {
        let key = format!("{word}.{arg}");
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys
}

fn cue_matches(cue: &str, arg: &ArgDescriptor) -> bool {
    let name = arg.name.to_lowercase();
    cue == name
        || camel_words(&arg.name).first().is_some_and(|w| w == cue)
        || arg
            .description
            .split_whitespace()
            .next()
            .is_some_and(|w| w.to_lowercase() == cue)
}

struct Pending<'a> {
    arg: &'a ArgDescriptor,
    kinds: Vec<EntityKind>,
}

/// Binds a method's arguments from working memory first, then from recognized
/// entities by declared kind, then by synonym mapping of description nouns.
/// Competing entities are settled by cue word (`from`, `to`) or sentence
/// order; otherwise the arg is left for the user.
pub fn bind_arguments(
    service_id: &str,
    method: &MethodDescriptor,
    entities: &[Entity],
    wm: &WorkingMemory,
    synonyms: &SynonymTable,
) -> ArgBinding {
    let mut binding = ArgBinding::default();
    let mut declared = Vec::new();
    let mut by_synonym = Vec::new();

    for arg in &method.args {
        let hit = wm_lookup_keys(service_id, &method.method_id, &arg.name)
            .into_iter()
            .find_map(|k| wm.get(&k).cloned());
        if let Some(value) = hit {
            binding.bound.insert(
                arg.name.clone(),
                BoundArg {
                    value,
                    source: BindingSource::Wm,
                    entity_index: None,
                },
            );
            continue;
        }
        match arg.declared_kind {
            Some(kind) => declared.push(Pending { arg, kinds: vec![kind] }),
            None => {
                let kinds: Vec<EntityKind> = synonyms
                    .kinds_for(&extract_nouns(&arg.description))
                    .into_iter()
                    .filter(|k| *k != EntityKind::Noun)
                    .collect();
                if !kinds.is_empty() {
                    by_synonym.push(Pending { arg, kinds });
                }
            }
        }
    }

    let mut consumed = vec![false; entities.len()];
    let mut ambiguous = BTreeSet::new();
    for group in [declared, by_synonym] {
        for kind in EntityKind::ALL {
            let args: Vec<&ArgDescriptor> = group
                .iter()
                .filter(|p| p.kinds.contains(&kind) && !binding.bound.contains_key(&p.arg.name))
                .map(|p| p.arg)
                .collect();
            if args.is_empty() {
                continue;
            }
            assign_kind(kind, args, entities, &mut consumed, &mut binding, &mut ambiguous);
        }
    }

    for arg in &method.args {
        if !binding.bound.contains_key(&arg.name) {
            binding.unresolved.push(arg.name.clone());
            if ambiguous.contains(&arg.name) {
                binding.ambiguous.push(arg.name.clone());
            }
        }
    }
    binding
}

fn assign_kind(
    kind: EntityKind,
    mut args: Vec<&ArgDescriptor>,
    entities: &[Entity],
    consumed: &mut [bool],
    binding: &mut ArgBinding,
    ambiguous: &mut BTreeSet<String>,
) {
    let mut take = |arg: &ArgDescriptor, i: usize, consumed: &mut [bool]| {
        consumed[i] = true;
        binding.bound.insert(
            arg.name.clone(),
            BoundArg {
                value: entities[i].normalized.to_value(),
                source: BindingSource::Entity,
                entity_index: Some(i),
            },
        );
    };

    let available = |consumed: &[bool]| -> Vec<usize> {
        (0..entities.len())
            .filter(|&i| !consumed[i] && entities[i].kind == kind)
            .collect()
    };

    // Cue phase: the word before the entity names exactly one arg.
    for i in available(consumed) {
        let Some(cue) = entities[i].cue.as_deref() else {
            continue;
        };
        let hits: Vec<usize> = (0..args.len()).filter(|&a| cue_matches(cue, args[a])).collect();
        if let [a] = hits[..] {
            let arg = args.remove(a);
            take(arg, i, consumed);
        }
    }

    // Order phase: pair by sentence order only when counts line up.
    let rest = available(consumed);
    if rest.is_empty() || args.is_empty() {
        return;
    }
    if rest.len() == args.len() {
        for (arg, i) in args.into_iter().zip(rest) {
            take(arg, i, consumed);
            ambiguous.remove(&arg.name);
        }
    } else {
        for arg in args {
            ambiguous.insert(arg.name.clone());
        }
    }
}
