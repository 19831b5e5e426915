//! Sessions and the conversation loop: request, match, disambiguate, bind,
//! plan, select concretes, execute.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use nlcompose_core::composition::{
    arg_key, execute_plan, fire_rules, generate_plan_with_keys, parse_rules, returns_keys, select_concrete,
    CompositionalRule, DeviceContext, ExecutionReport, ExecutionRequest, ExecutorSet, WorkingMemory,
};
use nlcompose_core::embedding::{index_corpus, rank_top, EmbeddedCorpus, SentenceEncoder};
use nlcompose_core::entities::{
    bind_arguments, extract_nouns, ArgBinding, BindingSource, BoundArg, Entity, EntityKind, Gazetteer, NounLexicon,
    Recognizer, SynonymTable,
};
use nlcompose_core::matching::{select_service, MatchCandidate, MatchOutcome, MatchThresholds};
use nlcompose_core::registry::{build_corpus, lookup_concretes, Diagnostic, MethodDescriptor, RegistrySnapshot};
use nlcompose_core::TypedValue;
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Config;
use crate::executors::executor_set;

/// Candidates kept per request; selection never looks past `MAX_CHOICES`.
pub const RANKED_LIMIT: usize = 10;

/// A registry snapshot with its embedded corpus.
#[derive(Debug)]
pub struct RegistryContext {
    pub snapshot: Arc<RegistrySnapshot>,
    pub index: EmbeddedCorpus,
    pub diagnostics: Vec<Diagnostic>,
    returns_keys: BTreeSet<String>,
}

impl RegistryContext {
    pub fn build(encoder: &dyn SentenceEncoder, snapshot: Arc<RegistrySnapshot>, diagnostics: Vec<Diagnostic>) -> Self {
        let index = index_corpus(encoder, &build_corpus(&snapshot), snapshot.version);
        RegistryContext {
            returns_keys: returns_keys(snapshot.abstracts.values()),
            snapshot,
            index,
            diagnostics,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    User,
    Engine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub speaker: Speaker,
    pub text: String,
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum PendingQuestion {
    MethodChoice {
        candidates: Vec<MatchCandidate>,
    },
    ArgValue {
        service_id: String,
        method_id: String,
        arg: String,
        prompt: String,
        expected_kind: Option<EntityKind>,
    },
}

// What a pending question needs to resume.
#[derive(Debug, Clone)]
struct Pending {
    question: PendingQuestion,
    entities: Vec<Entity>,
    answered: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    PendingQuestionOpen,
    NoPendingQuestion,
    InvalidAnswer,
    EmptyRequest,
    EmptyRegistry,
    Plan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum EngineReply {
    Executed {
        service_id: String,
        method_id: String,
        bindings: BTreeMap<String, BoundArg>,
        summary: Vec<String>,
        report: ExecutionReport,
        rules_fired: Vec<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        rule_error: Option<String>,
    },
    AskMethodChoice {
        prompt: String,
        candidates: Vec<MatchCandidate>,
    },
    AskArgValue {
        prompt: String,
        service_id: String,
        method_id: String,
        arg: String,
        expected_kind: Option<EntityKind>,
    },
    Rephrase {
        prompt: String,
        best: Option<MatchCandidate>,
    },
    Error {
        code: ErrorCode,
        message: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        pending: Option<PendingQuestion>,
    },
}

impl EngineReply {
    pub fn kind(&self) -> &'static str {
        match self {
            EngineReply::Executed { .. } => "Executed",
            EngineReply::AskMethodChoice { .. } => "AskMethodChoice",
            EngineReply::AskArgValue { .. } => "AskArgValue",
            EngineReply::Rephrase { .. } => "Rephrase",
            EngineReply::Error { .. } => "Error",
        }
    }

    fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        EngineReply::Error {
            code,
            message: message.into(),
            pending: None,
        }
    }

    /// Short text for the transcript.
    pub fn text(&self) -> String {
        match self {
            EngineReply::Executed { summary, .. } => summary.join("; "),
            EngineReply::AskMethodChoice { prompt, .. }
            | EngineReply::AskArgValue { prompt, .. }
            | EngineReply::Rephrase { prompt, .. } => prompt.clone(),
            EngineReply::Error { message, .. } => message.clone(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("no session `{0}`")]
    UnknownSession(String),
}

pub struct Session {
    pub session_id: String,
    pub wm: WorkingMemory,
    pub transcript: Vec<TranscriptEntry>,
    pub context: DeviceContext,
    pending: Option<Pending>,
    registry: Arc<RegistryContext>,
    rules: Vec<CompositionalRule>,
}

impl Session {
    pub fn pending(&self) -> Option<&PendingQuestion> {
        self.pending.as_ref().map(|p| &p.question)
    }

    pub fn registry_version_pinned(&self) -> u64 {
        self.registry.snapshot.version
    }

    fn log(&mut self, speaker: Speaker, text: String) {
        let timestamp_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64);
        self.transcript.push(TranscriptEntry {
            speaker,
            text,
            timestamp_ms,
        });
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WmDump {
    pub session_id: String,
    pub registry_version: u64,
    pub entries: BTreeMap<String, TypedValue>,
    pub audit: Vec<nlcompose_core::composition::AuditEntry>,
    pub pending: Option<PendingQuestion>,
    pub transcript: Vec<TranscriptEntry>,
}

pub struct Engine {
    encoder: Arc<dyn SentenceEncoder>,
    registry: RwLock<Arc<RegistryContext>>,
    sessions: Mutex<BTreeMap<String, Arc<Mutex<Session>>>>,
    next_session: AtomicU64,
    recognizer: Recognizer,
    synonyms: SynonymTable,
    executors: ExecutorSet,
    rules: Vec<CompositionalRule>,
    default_context: DeviceContext,
    pub config: Config,
}

fn load_gazetteer(path: &Option<std::path::PathBuf>, builtin: Gazetteer) -> anyhow::Result<Gazetteer> {
    match path {
        Some(p) => Gazetteer::load(p).with_context(|| format!("gazetteer {}", p.display())),
        None => Ok(builtin),
    }
}

impl Engine {
    pub fn new(config: Config, encoder: Arc<dyn SentenceEncoder>, snapshot: Arc<RegistrySnapshot>) -> anyhow::Result<Self> {
        let executors = executor_set(&config)?;
        Engine::with_executors(config, encoder, snapshot, executors)
    }

    pub fn with_executors(
        config: Config,
        encoder: Arc<dyn SentenceEncoder>,
        snapshot: Arc<RegistrySnapshot>,
        executors: ExecutorSet,
    ) -> anyhow::Result<Self> {
        config.thresholds.validate()?;
        let g = &config.gazetteers;
        let recognizer = Recognizer {
            locations: load_gazetteer(&g.locations, Gazetteer::locations())?,
            persons: load_gazetteer(&g.persons, Gazetteer::persons())?,
            companies: load_gazetteer(&g.companies, Gazetteer::companies())?,
            nouns: match &g.nouns {
                Some(p) => NounLexicon::load(p).with_context(|| format!("noun lexicon {}", p.display()))?,
                None => NounLexicon::default(),
            },
            reference_year: config.reference_year,
        };
        let mut synonyms = match &config.synonyms {
            Some(p) => SynonymTable::parse(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
            None => SynonymTable::default(),
        };
        if let Some(threshold) = config.synonym_fallback {
            synonyms = synonyms.with_embedding_fallback(Arc::clone(&encoder), threshold);
        }
        let mut rules = Vec::new();
        for path in &config.rules {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            rules.extend(parse_rules(&text).with_context(|| format!("in {}", path.display()))?);
        }
        let default_context: DeviceContext = config.context.parse()?;
        let registry = RegistryContext::build(encoder.as_ref(), snapshot, Vec::new());
        Ok(Engine {
            encoder,
            registry: RwLock::new(Arc::new(registry)),
            sessions: Mutex::new(BTreeMap::new()),
            next_session: AtomicU64::new(1),
            recognizer,
            synonyms,
            executors,
            rules,
            default_context,
            config,
        })
    }

    pub fn encoder(&self) -> &Arc<dyn SentenceEncoder> {
        &self.encoder
    }

    pub fn registry(&self) -> Arc<RegistryContext> {
        Arc::clone(&self.registry.read())
    }

    /// Installs a new snapshot for sessions created from now on.
    pub fn update_registry(&self, snapshot: Arc<RegistrySnapshot>, diagnostics: Vec<Diagnostic>) {
        let ctx = RegistryContext::build(self.encoder.as_ref(), snapshot, diagnostics);
        *self.registry.write() = Arc::new(ctx);
    }

    pub fn create_session(&self) -> String {
        let id = format!("session-{}", self.next_session.fetch_add(1, Ordering::Relaxed));
        let session = Session {
            session_id: id.clone(),
            wm: WorkingMemory::new(),
            transcript: Vec::new(),
            context: self.default_context.clone(),
            pending: None,
            registry: self.registry(),
            rules: self.rules.clone(),
        };
        self.sessions.lock().insert(id.clone(), Arc::new(Mutex::new(session)));
        id
    }

    pub fn close_session(&self, id: &str) -> Result<(), EngineError> {
        self.sessions
            .lock()
            .remove(id)
            .map(|_| ())
            .ok_or_else(|| EngineError::UnknownSession(id.to_string()))
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().len()
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, EngineError> {
        self.sessions
            .lock()
            .get(id)
            .cloned()
            .ok_or_else(|| EngineError::UnknownSession(id.to_string()))
    }

    /// Runs `f` with the session locked; calls on one session queue up.
    pub fn with_session<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> T) -> Result<T, EngineError> {
        let session = self.session(id)?;
        let mut guard = session.lock();
        Ok(f(&mut guard))
    }

    pub fn wm_dump(&self, id: &str) -> Result<WmDump, EngineError> {
        self.with_session(id, |s| WmDump {
            session_id: s.session_id.clone(),
            registry_version: s.registry_version_pinned(),
            entries: s.wm.entries().clone(),
            audit: s.wm.audit().to_vec(),
            pending: s.pending().cloned(),
            transcript: s.transcript.clone(),
        })
    }

    pub fn handle_utterance(&self, id: &str, text: &str) -> Result<EngineReply, EngineError> {
        self.with_session(id, |s| {
            s.log(Speaker::User, text.to_string());
            let reply = self.utterance(s, text);
            s.log(Speaker::Engine, reply.text());
            reply
        })
    }

    pub fn answer_pending(&self, id: &str, answer: &str) -> Result<EngineReply, EngineError> {
        self.with_session(id, |s| {
            s.log(Speaker::User, answer.to_string());
            let reply = self.answer(s, answer);
            s.log(Speaker::Engine, reply.text());
            reply
        })
    }

    /// Creates a throwaway session, handles `text` and drops the session.
    pub fn one_shot(&self, text: &str) -> EngineReply {
        let id = self.create_session();
        let reply = self.handle_utterance(&id, text).expect("session just created");
        let _ = self.close_session(&id);
        reply
    }

    /// The best [`RANKED_LIMIT`] candidates and the selection outcome for `text`.
    pub fn match_text(
        &self,
        registry: &RegistryContext,
        text: &str,
    ) -> Result<(Vec<MatchCandidate>, MatchOutcome), EngineReply> {
        let vector = self
            .encoder
            .embed(text)
            .map_err(|e| EngineReply::error(ErrorCode::EmptyRequest, e.to_string()))?;
        let ranked = rank_top(&registry.index, &vector, RANKED_LIMIT)
            .map_err(|e| EngineReply::error(ErrorCode::EmptyRegistry, e.to_string()))?;
        let outcome = select_service(&ranked, &self.thresholds())
            .map_err(|e| EngineReply::error(ErrorCode::EmptyRegistry, e.to_string()))?;
        Ok((ranked, outcome))
    }

    pub fn thresholds(&self) -> MatchThresholds {
        self.config.thresholds
    }

    fn utterance(&self, s: &mut Session, text: &str) -> EngineReply {
        if let Some(p) = &s.pending {
            return EngineReply::Error {
                code: ErrorCode::PendingQuestionOpen,
                message: "a question is waiting for an answer".into(),
                pending: Some(p.question.clone()),
            };
        }
        let registry = Arc::clone(&s.registry);
        let (ranked, outcome) = match self.match_text(&registry, text) {
            Ok(m) => m,
            Err(reply) => return reply,
        };
        let entities = self.recognizer.recognize(text);
        match outcome {
            MatchOutcome::Selected(top) => self.proceed(s, &top.service_id, &top.method_id, entities, BTreeSet::new()),
            MatchOutcome::NeedsDisambiguation(candidates) => {
                let options: Vec<String> = candidates
                    .iter()
                    .enumerate()
                    .map(|(i, c)| format!("{}) {}", i + 1, describe(&registry.snapshot, c)))
                    .collect();
                let prompt = format!("Which one did you mean? {}", options.join(" "));
                s.pending = Some(Pending {
                    question: PendingQuestion::MethodChoice {
                        candidates: candidates.clone(),
                    },
                    entities,
                    answered: BTreeSet::new(),
                });
                EngineReply::AskMethodChoice { prompt, candidates }
            }
            MatchOutcome::NoMatch => EngineReply::Rephrase {
                prompt: "I could not match that to any service. Could you rephrase it?".into(),
                best: ranked.into_iter().next(),
            },
        }
    }

    fn answer(&self, s: &mut Session, answer: &str) -> EngineReply {
        let Some(pending) = s.pending.clone() else {
            return EngineReply::error(ErrorCode::NoPendingQuestion, "there is no question to answer");
        };
        let invalid = |message: String| EngineReply::Error {
            code: ErrorCode::InvalidAnswer,
            message,
            pending: Some(pending.question.clone()),
        };
        match &pending.question {
            PendingQuestion::MethodChoice { candidates } => {
                let Some(chosen) = parse_choice(answer, candidates) else {
                    return invalid(format!("answer with a number from 1 to {}", candidates.len()));
                };
                s.pending = None;
                self.proceed(s, &chosen.service_id, &chosen.method_id, pending.entities, BTreeSet::new())
            }
            PendingQuestion::ArgValue {
                service_id,
                method_id,
                arg,
                expected_kind,
                ..
            } => {
                let Some(value) = self.recognizer.parse_answer(answer, *expected_kind) else {
                    let kind = expected_kind.map_or("a value".to_string(), |k| format!("a {k}"));
                    return invalid(format!("`{}` is not {kind}", answer.trim()));
                };
                let key = arg_key(service_id, method_id, arg, &s.registry.returns_keys);
                s.wm.put(key, value.to_value(), "user");
                let mut answered = pending.answered;
                answered.insert(arg.clone());
                s.pending = None;
                self.proceed(s, service_id, method_id, pending.entities, answered)
            }
        }
    }

    fn proceed(
        &self,
        s: &mut Session,
        service_id: &str,
        method_id: &str,
        entities: Vec<Entity>,
        answered: BTreeSet<String>,
    ) -> EngineReply {
        let registry = Arc::clone(&s.registry);
        let Some(method) = registry.snapshot.method(service_id, method_id) else {
            return EngineReply::error(ErrorCode::Plan, format!("unknown method {service_id}.{method_id}"));
        };
        let mut binding = bind_arguments(service_id, method, &entities, &s.wm, &self.synonyms);
        for arg in &answered {
            if let Some(b) = binding.bound.get_mut(arg) {
                b.source = BindingSource::User;
            }
        }
        if let Some(first) = binding.unresolved.first().cloned() {
            let desc = method.arg(&first).expect("unresolved args are declared");
            let expected_kind = desc.declared_kind.or_else(|| {
                self.synonyms
                    .kinds_for(&extract_nouns(&desc.description))
                    .into_iter()
                    .find(|k| *k != EntityKind::Noun)
            });
            let question = PendingQuestion::ArgValue {
                service_id: service_id.to_string(),
                method_id: method_id.to_string(),
                arg: first.clone(),
                prompt: desc.description.clone(),
                expected_kind,
            };
            s.pending = Some(Pending {
                question,
                entities,
                answered,
            });
            return EngineReply::AskArgValue {
                prompt: desc.description.clone(),
                service_id: service_id.to_string(),
                method_id: method_id.to_string(),
                arg: first,
                expected_kind,
            };
        }
        self.execute(s, service_id, method, binding)
    }

    fn execute(&self, s: &mut Session, service_id: &str, method: &MethodDescriptor, binding: ArgBinding) -> EngineReply {
        let registry = Arc::clone(&s.registry);
        for (arg, bound) in &binding.bound {
            let key = arg_key(service_id, &method.method_id, arg, &registry.returns_keys);
            if s.wm.get(&key) != Some(&bound.value) {
                let source = match bound.source {
                    BindingSource::Wm => "wm",
                    BindingSource::Entity => "entity",
                    BindingSource::User => "user",
                };
                s.wm.put(key, bound.value.clone(), source);
            }
        }
        let mut plan = match generate_plan_with_keys(
            &registry.snapshot,
            &registry.returns_keys,
            service_id,
            &method.method_id,
            &s.wm,
            &s.context,
            self.config.iteration_cap,
        ) {
            Ok(p) => p,
            Err(e) => return EngineReply::error(ErrorCode::Plan, e.to_string()),
        };
        let report = execute_plan(&mut plan, &mut s.wm, &self.executors).without_timings();
        let summary = report
            .steps
            .iter()
            .map(|st| {
                let on = st.concrete_id.as_deref().map(|c| format!(" on {c}")).unwrap_or_default();
                let why = st.error.as_deref().or(st.blocked_by.as_deref()).map(|w| format!(" ({w})")).unwrap_or_default();
                format!("{}.{} {}{on}{why}", st.service_id, st.method_id, st.status.as_str())
            })
            .collect();

        let (rules_fired, rule_error) = self.fire_session_rules(s, &registry);
        EngineReply::Executed {
            service_id: service_id.to_string(),
            method_id: method.method_id.clone(),
            bindings: binding.bound,
            summary,
            report,
            rules_fired,
            rule_error,
        }
    }

    fn fire_session_rules(&self, s: &mut Session, registry: &RegistryContext) -> (Vec<String>, Option<String>) {
        if s.rules.is_empty() {
            return (Vec::new(), None);
        }
        let context = s.context.clone();
        let mut invoker = |service_id: &str, method_id: &str, wm: &WorkingMemory| {
            ground_and_run(registry, &self.executors, &context, service_id, method_id, wm)
        };
        match fire_rules(&mut s.rules, &mut s.wm, &mut invoker, self.config.iteration_cap) {
            Ok(trace) => (trace.fired_rules().map(str::to_string).collect(), None),
            Err(e) => (Vec::new(), Some(e.to_string())),
        }
    }
}

// Runs S.m for a user rule with arguments read from their WM keys.
fn ground_and_run(
    registry: &RegistryContext,
    executors: &ExecutorSet,
    context: &DeviceContext,
    service_id: &str,
    method_id: &str,
    wm: &WorkingMemory,
) -> Result<TypedValue, String> {
    let method = registry
        .snapshot
        .method(service_id, method_id)
        .ok_or_else(|| format!("unknown method {service_id}.{method_id}"))?;
    let concretes = lookup_concretes(&registry.snapshot, service_id).map_err(|e| e.to_string())?;
    let concrete = select_concrete(&concretes, method_id, context).map_err(|e| e.to_string())?;
    let mut args = BTreeMap::new();
    for a in &method.args {
        let key = arg_key(service_id, method_id, &a.name, &registry.returns_keys);
        let v = wm.get(&key).ok_or_else(|| format!("missing argument `{}` (key `{key}`)", a.name))?;
        args.insert(a.name.clone(), v.clone());
    }
    let request = ExecutionRequest {
        concrete_id: concrete.concrete_id.clone(),
        method_id: method_id.to_string(),
        args,
    };
    executors
        .execute(&concrete.executor_binding, &request)
        .map_err(|e| e.to_string())
}

fn describe(snapshot: &RegistrySnapshot, c: &MatchCandidate) -> String {
    snapshot
        .method(&c.service_id, &c.method_id)
        .and_then(|m| m.capabilities.first())
        .map_or_else(|| c.qualified_name(), |cap| format!("{} ({cap})", c.qualified_name()))
}

/// A 1-based index, or the method's id or qualified name.
fn parse_choice<'a>(answer: &str, candidates: &'a [MatchCandidate]) -> Option<&'a MatchCandidate> {
    let answer = answer.trim();
    if let Ok(n) = answer.parse::<usize>() {
        return n.checked_sub(1).and_then(|i| candidates.get(i));
    }
    candidates
        .iter()
        .find(|c| c.method_id.eq_ignore_ascii_case(answer) || c.qualified_name().eq_ignore_ascii_case(answer))
}
