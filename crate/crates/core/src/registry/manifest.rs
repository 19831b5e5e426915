//! Line-oriented manifest format.
//!
//! ```text
//! service CalendarService
//!   method checkAvailability
//!     capability "checks calendar availability on a range of dates"
//!     arg fromDate "check calendar from date (yyyy-mm-dd)" kind DATE
//!     returns calendarAvailability "whether the range is free"
//!
//! concrete YahooCalendarService implements CalendarService
//!   executor mock
//!   qos checkAvailability BATTERY = HALF_CHARGED
//! ```
//!
//! Indentation is insignificant and `#` starts a comment outside quotes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{
    is_identifier, AbstractServiceDescriptor, ArgDescriptor, ConcreteServiceDescriptor, MethodDescriptor,
    QosDimension, QosRequirement, RegistryError,
};
use crate::entities::EntityKind;

#[derive(Debug, Clone, PartialEq)]
pub enum Manifest {
    Abstract(AbstractServiceDescriptor),
    Concrete(ConcreteServiceDescriptor),
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Word(String),
    Quoted(String),
    Equals,
}

struct Line {
    number: usize,
    tokens: Vec<Token>,
}

fn syntax(line: usize, reason: impl Into<String>) -> RegistryError {
    RegistryError::Syntax {
        line,
        reason: reason.into(),
    }
}

fn tokenize_line(number: usize, raw: &str) -> Result<Vec<Token>, RegistryError> {
    let mut tokens = Vec::new();
    let mut chars = raw.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '#' => break,
            c if c.is_whitespace() => {
                chars.next();
            }
            '=' => {
                chars.next();
                tokens.push(Token::Equals);
            }
            '"' => {
                chars.next();
                let mut text = String::new();
                let mut closed = false;
                while let Some(c) = chars.next() {
                    match c {
                        '"' => {
                            closed = true;
                            break;
                        }
                        '\\' => match chars.next() {
                            Some('"') => text.push('"'),
                            Some('\\') => text.push('\\'),
                            Some('n') => text.push('\n'),
                            Some(other) => return Err(syntax(number, format!("unknown escape `\\{other}`"))),
                            None => break,
                        },
                        c => text.push(c),
                    }
                }
                if !closed {
                    return Err(syntax(number, "unterminated string"));
                }
                tokens.push(Token::Quoted(text));
            }
            _ => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '=' || c == '"' || c == '#' {
                        break;
                    }
                    word.push(c);
                    chars.next();
                }
                tokens.push(Token::Word(word));
            }
        }
    }
    Ok(tokens)
}

struct Cursor {
    lines: Vec<Line>,
    pos: usize,
}

impl Cursor {
    fn peek_keyword(&self) -> Option<&str> {
        match self.lines.get(self.pos)?.tokens.first()? {
            Token::Word(w) => Some(w.as_str()),
            _ => None,
        }
    }

    fn next(&mut self) -> Option<&Line> {
        let line = self.lines.get(self.pos);
        self.pos += 1;
        line
    }
}

/// Parses one manifest. Deterministic; grammar violations report the line.
pub fn parse_manifest(text: &str) -> Result<Manifest, RegistryError> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let tokens = tokenize_line(i + 1, raw)?;
        if !tokens.is_empty() {
            lines.push(Line { number: i + 1, tokens });
        }
    }
    if lines.is_empty() {
        return Err(syntax(1, "empty manifest"));
    }
    let mut cursor = Cursor { lines, pos: 0 };
    let manifest = match cursor.peek_keyword() {
        Some("service") => Manifest::Abstract(parse_service(&mut cursor)?),
        Some("concrete") => Manifest::Concrete(parse_concrete(&mut cursor)?),
        _ => {
            let n = cursor.lines[0].number;
            return Err(syntax(n, "expected `service` or `concrete`"));
        }
    };
    if let Some(line) = cursor.next() {
        return Err(syntax(line.number, "unexpected trailing content"));
    }
    Ok(manifest)
}

fn expect_ident(line: &Line, idx: usize, what: &str) -> Result<String, RegistryError> {
    match line.tokens.get(idx) {
        Some(Token::Word(w)) if is_identifier(w) => Ok(w.clone()),
        Some(Token::Word(w)) => Err(syntax(line.number, format!("`{w}` is not a valid {what}"))),
        _ => Err(syntax(line.number, format!("expected {what}"))),
    }
}

fn expect_quoted(line: &Line, idx: usize, what: &str) -> Result<String, RegistryError> {
    match line.tokens.get(idx) {
        Some(Token::Quoted(q)) => Ok(q.clone()),
        _ => Err(syntax(line.number, format!("expected quoted {what}"))),
    }
}

fn expect_word(line: &Line, idx: usize, word: &str) -> Result<(), RegistryError> {
    match line.tokens.get(idx) {
        Some(Token::Word(w)) if w == word => Ok(()),
        _ => Err(syntax(line.number, format!("expected `{word}`"))),
    }
}

fn expect_end(line: &Line, len: usize) -> Result<(), RegistryError> {
    if line.tokens.len() > len {
        Err(syntax(line.number, "unexpected tokens at end of line"))
    } else {
        Ok(())
    }
}

fn parse_service(cursor: &mut Cursor) -> Result<AbstractServiceDescriptor, RegistryError> {
    let line = cursor.next().expect("peeked");
    let service_id = expect_ident(line, 1, "service id")?;
    expect_end(line, 2)?;
    let header_line = line.number;
    let mut methods = Vec::new();
    while cursor.peek_keyword() == Some("method") {
        methods.push(parse_method(cursor)?);
    }
    if let Some(line) = cursor.lines.get(cursor.pos) {
        return Err(syntax(line.number, "expected `method`"));
    }
    if methods.is_empty() {
        return Err(syntax(header_line, "service declares no methods"));
    }
    let service = AbstractServiceDescriptor { service_id, methods };
    service.validate()?;
    Ok(service)
}

fn parse_method(cursor: &mut Cursor) -> Result<MethodDescriptor, RegistryError> {
    let line = cursor.next().expect("peeked");
    let method_id = expect_ident(line, 1, "method id")?;
    expect_end(line, 2)?;
    let mut capabilities = Vec::new();
    while cursor.peek_keyword() == Some("capability") {
        let line = cursor.next().expect("peeked");
        capabilities.push(expect_quoted(line, 1, "capability sentence")?);
        expect_end(line, 2)?;
    }
    let mut args = Vec::new();
    while cursor.peek_keyword() == Some("arg") {
        let line = cursor.next().expect("peeked");
        let name = expect_ident(line, 1, "argument name")?;
        let description = expect_quoted(line, 2, "argument description")?;
        let declared_kind = if line.tokens.len() > 3 {
            expect_word(line, 3, "kind")?;
            let kind = match line.tokens.get(4) {
                Some(Token::Word(w)) => w
                    .parse::<EntityKind>()
                    .map_err(|e| syntax(line.number, e))?,
                _ => return Err(syntax(line.number, "expected entity kind")),
            };
            expect_end(line, 5)?;
            Some(kind)
        } else {
            None
        };
        args.push(ArgDescriptor {
            name,
            description,
            declared_kind,
        });
    }
    let (returns_key, returns_desc) = if cursor.peek_keyword() == Some("returns") {
        let line = cursor.next().expect("peeked");
        let key = match line.tokens.get(1) {
            Some(Token::Word(w)) if is_return_key(w) => w.clone(),
            _ => return Err(syntax(line.number, "expected return key")),
        };
        let desc = expect_quoted(line, 2, "return description")?;
        expect_end(line, 3)?;
        (key, desc)
    } else {
        (MethodDescriptor::default_returns_key(&method_id), String::new())
    };
    let method = MethodDescriptor {
        method_id,
        capabilities,
        args,
        returns_key,
        returns_desc,
    };
    method.validate()?;
    Ok(method)
}

// Return keys may be dotted (`flight.selected`), each segment an identifier.
fn is_return_key(s: &str) -> bool {
    s.split('.').all(is_identifier)
}

fn parse_concrete(cursor: &mut Cursor) -> Result<ConcreteServiceDescriptor, RegistryError> {
    let line = cursor.next().expect("peeked");
    let concrete_id = expect_ident(line, 1, "concrete id")?;
    expect_word(line, 2, "implements")?;
    let implements = expect_ident(line, 3, "service id")?;
    expect_end(line, 4)?;
    let mut executor_binding = ConcreteServiceDescriptor::DEFAULT_EXECUTOR.to_string();
    if cursor.peek_keyword() == Some("executor") {
        let line = cursor.next().expect("peeked");
        executor_binding = expect_ident(line, 1, "executor name")?;
        expect_end(line, 2)?;
    }
    let mut qos: BTreeMap<String, Vec<QosRequirement>> = BTreeMap::new();
    while cursor.peek_keyword() == Some("qos") {
        let line = cursor.next().expect("peeked");
        let method_id = expect_ident(line, 1, "method id")?;
        let dimension = match line.tokens.get(2) {
            Some(Token::Word(w)) => w.parse::<QosDimension>().map_err(|e| syntax(line.number, e))?,
            _ => return Err(syntax(line.number, "expected QoS dimension")),
        };
        if line.tokens.get(3) != Some(&Token::Equals) {
            return Err(syntax(line.number, "expected `=`"));
        }
        let level = expect_ident(line, 4, "QoS level")?;
        expect_end(line, 5)?;
        let requirement = QosRequirement::new(dimension, &level).ok_or_else(|| {
            RegistryError::Invariant(format!("`{level}` is not a {dimension} level"))
        })?;
        let entry = qos.entry(method_id).or_default();
        if entry.iter().any(|r| r.dimension == dimension) {
            return Err(syntax(line.number, format!("{dimension} declared twice")));
        }
        entry.push(requirement);
    }
    if let Some(line) = cursor.lines.get(cursor.pos) {
        return Err(syntax(line.number, "expected `qos`"));
    }
    Ok(ConcreteServiceDescriptor {
        concrete_id,
        implements,
        qos,
        executor_binding,
    })
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Renders a manifest in the canonical layout accepted by [`parse_manifest`].
pub fn serialize_manifest(manifest: &Manifest) -> String {
    let mut out = String::new();
    match manifest {
        Manifest::Abstract(service) => {
            writeln!(out, "service {}", service.service_id).unwrap();
            for m in &service.methods {
                writeln!(out, "  method {}", m.method_id).unwrap();
                for cap in &m.capabilities {
                    writeln!(out, "    capability {}", quote(cap)).unwrap();
                }
                for arg in &m.args {
                    write!(out, "    arg {} {}", arg.name, quote(&arg.description)).unwrap();
                    if let Some(kind) = arg.declared_kind {
                        write!(out, " kind {kind}").unwrap();
                    }
                    out.push('\n');
                }
                writeln!(out, "    returns {} {}", m.returns_key, quote(&m.returns_desc)).unwrap();
            }
        }
        Manifest::Concrete(c) => {
            writeln!(out, "concrete {} implements {}", c.concrete_id, c.implements).unwrap();
            writeln!(out, "  executor {}", c.executor_binding).unwrap();
            for (method_id, reqs) in &c.qos {
                for r in reqs {
                    writeln!(out, "  qos {} {} = {}", method_id, r.dimension, r.required_level).unwrap();
                }
            }
        }
    }
    out
}
