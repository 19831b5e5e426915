use std::collections::BTreeSet;

use super::{Action, ArithOp, CmpOp, CompositionalRule, Expr, RuleSyntaxError};
use crate::value::TypedValue;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    /// Rule name following `rule`; may contain hyphens.
    Name(String),
    Str(String),
    Num(f64),
    Sym(&'static str),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::Name(s) => format!("`{s}`"),
            Tok::Str(s) => format!("string '{s}'"),
            Tok::Num(n) => format!("number {n}"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

const SYMBOLS: [&str; 15] = [
    "==", "!=", "<=", ">=", "&&", "||", "<", ">", "!", "(", ")", ",", ".", "+", "-",
];

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, RuleSyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut line = 1;
    let mut i = 0;
    let err = |line, reason: String| RuleSyntaxError { line, reason };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let after_rule = matches!(out.last(), Some((Tok::Ident(k), _)) if k == "rule");
        if after_rule {
            let start = i;
            while i < chars.len() && !chars[i].is_whitespace() {
                i += 1;
            }
            let name: String = chars[start..i].iter().collect();
            let valid = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !valid {
                return Err(err(line, format!("invalid rule name `{name}`")));
            }
            out.push((Tok::Name(name), line));
            continue;
        }
        if c == '\'' || c == '"' {
            let start_line = line;
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None | Some('\n') => return Err(err(start_line, "unterminated string".into())),
                    Some(&q) if q == c => break,
                    Some('\\') => {
                        i += 1;
                        match chars.get(i) {
                            Some('n') => s.push('\n'),
                            Some(&e @ ('\\' | '\'' | '"')) => s.push(e),
                            other => {
                                return Err(err(line, format!("bad escape `\\{}`", other.copied().unwrap_or(' '))))
                            }
                        }
                    }
                    Some(&ch) => s.push(ch),
                }
                i += 1;
            }
            i += 1;
            out.push((Tok::Str(s), start_line));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let raw: String = chars[start..i].iter().collect();
            let n = raw.parse::<f64>().map_err(|_| err(line, format!("bad number `{raw}`")))?;
            out.push((Tok::Num(n), line));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), line));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                out.push((Tok::Sym(sym), line));
                i += sym.len();
            }
            None => return Err(err(line, format!("unexpected character `{c}`"))),
        }
    }
    out.push((Tok::Eof, line));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn line(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, reason: impl Into<String>) -> Result<T, RuleSyntaxError> {
        Err(RuleSyntaxError {
            line: self.line(),
            reason: reason.into(),
        })
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(k) if k == kw)
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(s) if *s == sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, sym: &str) -> Result<(), RuleSyntaxError> {
        if self.eat_sym(sym) {
            Ok(())
        } else {
            self.fail(format!("expected `{sym}`, found {}", self.peek().describe()))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<String, RuleSyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.fail(format!("expected {what}, found {}", other.describe())),
        }
    }

    fn expect_word(&mut self, word: &str) -> Result<(), RuleSyntaxError> {
        if self.is_keyword(word) {
            self.bump();
            Ok(())
        } else {
            self.fail(format!("expected `{word}`, found {}", self.peek().describe()))
        }
    }

    fn expect_str(&mut self) -> Result<String, RuleSyntaxError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            other => self.fail(format!("expected a quoted key, found {}", other.describe())),
        }
    }

    fn integer(&mut self) -> Result<i64, RuleSyntaxError> {
        let negative = self.eat_sym("-");
        match self.peek().clone() {
            Tok::Num(n) if n.fract() == 0.0 => {
                self.bump();
                Ok(if negative { -(n as i64) } else { n as i64 })
            }
            other => self.fail(format!("expected an integer priority, found {}", other.describe())),
        }
    }

    fn rule(&mut self, index: usize) -> Result<CompositionalRule, RuleSyntaxError> {
        let mut name = format!("rule-{index}");
        let mut description = String::new();
        let mut priority = None;
        if self.is_keyword("rule") {
            self.bump();
            match self.bump() {
                Tok::Name(n) => name = n,
                other => return self.fail(format!("expected a rule name, found {}", other.describe())),
            }
        }
        loop {
            if self.is_keyword("desc") {
                self.bump();
                description = match self.peek().clone() {
                    Tok::Str(s) => {
                        self.bump();
                        s
                    }
                    other => return self.fail(format!("expected a quoted description, found {}", other.describe())),
                };
            } else if self.is_keyword("priority") {
                self.bump();
                if priority.is_some() {
                    return self.fail("priority given twice");
                }
                priority = Some(self.integer()?);
            } else {
                break;
            }
        }
        self.expect_word("when")?;
        let when = self.or()?;
        let mut then = Vec::new();
        while self.is_keyword("then") {
            self.bump();
            then.push(self.action()?);
        }
        if then.is_empty() {
            return self.fail(format!("expected `then`, found {}", self.peek().describe()));
        }
        Ok(CompositionalRule::new(name, description, when, then).with_priority(priority.unwrap_or(0)))
    }

    fn action(&mut self) -> Result<Action, RuleSyntaxError> {
        let head = self.expect_ident("an action")?;
        match head.as_str() {
            "wm" => {
                self.expect_sym(".")?;
                let op = self.expect_ident("`put` or `remove`")?;
                self.expect_sym("(")?;
                let key = self.expect_str()?;
                let action = match op.as_str() {
                    "put" => {
                        self.expect_sym(",")?;
                        Action::Put(key, self.or()?)
                    }
                    "remove" => Action::Remove(key),
                    other => return self.fail(format!("unknown working-memory action `{other}`")),
                };
                self.expect_sym(")")?;
                Ok(action)
            }
            "invoke" => {
                self.expect_sym("(")?;
                let service_id = self.expect_ident("a service id")?;
                self.expect_sym(".")?;
                let method_id = self.expect_ident("a method id")?;
                self.expect_sym(")")?;
                Ok(Action::Invoke { service_id, method_id })
            }
            other => self.fail(format!("unknown action `{other}`")),
        }
    }

    fn or(&mut self) -> Result<Expr, RuleSyntaxError> {
        let mut lhs = self.and()?;
        while self.eat_sym("||") {
            lhs = Expr::Or(Box::new(lhs), Box::new(self.and()?));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, RuleSyntaxError> {
        let mut lhs = self.unary()?;
        while self.eat_sym("&&") {
            lhs = Expr::And(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, RuleSyntaxError> {
        if self.eat_sym("!") {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, RuleSyntaxError> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::Sym("==") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.additive()?;
        Ok(Expr::Cmp(op, Box::new(lhs), Box::new(rhs)))
    }

    fn additive(&mut self) -> Result<Expr, RuleSyntaxError> {
        let mut lhs = self.primary()?;
        loop {
            let op = if self.eat_sym("+") {
                ArithOp::Add
            } else if self.eat_sym("-") {
                ArithOp::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Arith(op, Box::new(lhs), Box::new(self.primary()?));
        }
    }

    fn primary(&mut self) -> Result<Expr, RuleSyntaxError> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Expr::Literal(TypedValue::Num(n)))
            }
            Tok::Sym("-") => {
                self.bump();
                match self.bump() {
                    Tok::Num(n) => Ok(Expr::Literal(TypedValue::Num(-n))),
                    other => self.fail(format!("expected a number after `-`, found {}", other.describe())),
                }
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Literal(TypedValue::Str(s)))
            }
            Tok::Sym("(") => {
                self.bump();
                let inner = self.or()?;
                self.expect_sym(")")?;
                Ok(inner)
            }
            Tok::Ident(id) => {
                self.bump();
                match id.as_str() {
                    "true" => Ok(Expr::Literal(TypedValue::Bool(true))),
                    "false" => Ok(Expr::Literal(TypedValue::Bool(false))),
                    "null" => Ok(Expr::Null),
                    "results" => Ok(Expr::Results),
                    "wm" => {
                        self.expect_sym(".")?;
                        self.expect_word("get")?;
                        self.expect_sym("(")?;
                        let key = self.expect_str()?;
                        self.expect_sym(")")?;
                        Ok(Expr::WmGet(key))
                    }
                    other => self.fail(format!("unexpected identifier `{other}`")),
                }
            }
            other => self.fail(format!("expected an expression, found {}", other.describe())),
        }
    }
}

/// Parses a rule file holding any number of rules.
pub fn parse_rules(text: &str) -> Result<Vec<CompositionalRule>, RuleSyntaxError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let mut rules = Vec::new();
    let mut names = BTreeSet::new();
    while *p.peek() != Tok::Eof {
        let line = p.line();
        let rule = p.rule(rules.len() + 1)?;
        if !names.insert(rule.name.clone()) {
            return Err(RuleSyntaxError {
                line,
                reason: format!("duplicate rule name `{}`", rule.name),
            });
        }
        rules.push(rule);
    }
    Ok(rules)
}

/// Parses exactly one rule.
pub fn parse_rule(text: &str) -> Result<CompositionalRule, RuleSyntaxError> {
    let mut rules = parse_rules(text)?;
    match rules.len() {
        1 => Ok(rules.remove(0)),
        0 => Err(RuleSyntaxError {
            line: 1,
            reason: "empty rule".into(),
        }),
        n => Err(RuleSyntaxError {
            line: 1,
            reason: format!("expected one rule, found {n}"),
        }),
    }
}
