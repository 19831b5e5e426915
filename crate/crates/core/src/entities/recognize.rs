//! Pattern and gazetteer recognizers. Candidates from every recognizer are
//! resolved longest-first, so `August 10 at 10:30am` wins over the `August 10`
//! date and the `10` number inside it.

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use once_cell::sync::Lazy;
use regex::{Captures, Regex};

use super::{Entity, EntityKind, Gazetteer, Normalized, NounLexicon};

const MONTH: &str = r"(january|february|march|april|may|june|july|august|september|october|november|december|jan|feb|mar|apr|jun|jul|aug|sept|sep|oct|nov|dec)\.?";

static DATETIME_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(&format!(
        r"(?i)\b{MONTH}\s+(\d{{1,2}})(?:st|nd|rd|th)?(?:,?\s+(\d{{4}}))?\s+at\s+(\d{{1,2}})(?::(\d{{2}}))?\s*(am|pm|a\.m\.|p\.m\.)?"
    ))
    .unwrap()
});
static MONTH_DAY_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(&format!(r"(?i)\b{MONTH}\s+(\d{{1,2}})(?:st|nd|rd|th)?\b(?:,?\s+(\d{{4}})\b)?")).unwrap()
});
static ISO_DATE_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"\b(\d{4})-(\d{2})-(\d{2})\b").unwrap());
static CLOCK_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?i)\b(\d{1,2})(?::(\d{2}))?\s*(am|pm|a\.m\.|p\.m\.)|\b(\d{1,2}):(\d{2})\b").unwrap()
});
static MONEY_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?i)\$\s?(\d{1,3}(?:,\d{3})+|\d+)(?:\.(\d{1,2}))?\b|\b(\d+)(?:\.(\d{1,2}))?\s*(?:dollars|usd|bucks)\b")
        .unwrap()
});
static NUMBER_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?i)\b\d+(?:\.\d+)?\b|\b(?:one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve)\b").unwrap()
});
static WORD_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"[A-Za-z]+").unwrap());

fn month_number(token: &str) -> Option<u32> {
    let t = token.trim_end_matches('.').to_lowercase();
    let m = match &t[..3.min(t.len())] {
        "jan" => 1,
        "feb" => 2,
        "mar" => 3,
        "apr" => 4,
        "may" => 5,
        "jun" => 6,
        "jul" => 7,
        "aug" => 8,
        "sep" => 9,
        "oct" => 10,
        "nov" => 11,
        "dec" => 12,
        _ => return None,
    };
    Some(m)
}

fn word_number(w: &str) -> Option<f64> {
    let n = match w.to_lowercase().as_str() {
        "one" => 1,
        "two" => 2,
        "three" => 3,
        "four" => 4,
        "five" => 5,
        "six" => 6,
        "seven" => 7,
        "eight" => 8,
        "nine" => 9,
        "ten" => 10,
        "eleven" => 11,
        "twelve" => 12,
        _ => return None,
    };
    Some(n as f64)
}

fn clock(hour: u32, minute: u32, meridiem: Option<&str>) -> Option<NaiveTime> {
    let hour = match meridiem.map(|m| m.to_lowercase().replace('.', "")) {
        None => hour,
        Some(_) if hour == 0 || hour > 12 => return None,
        Some(m) if m == "am" => hour % 12,
        Some(_) => hour % 12 + 12,
    };
    NaiveTime::from_hms_opt(hour, minute, 0)
}

fn cap_u32(c: &Captures, i: usize) -> Option<u32> {
    c.get(i).and_then(|m| m.as_str().parse().ok())
}

/// Renders minor units as `$D.CC`.
pub fn format_money(cents: i64) -> String {
    let sign = if cents < 0 { "-" } else { "" };
    let abs = cents.unsigned_abs();
    format!("{sign}${}.{:02}", abs / 100, abs % 100)
}

/// Parses `$700`, `$1,250.50`, `700 dollars` or a bare `700` into cents.
pub fn parse_money(text: &str) -> Option<i64> {
    let text = text.trim();
    if let Some(c) = MONEY_RE.captures(text) {
        if c.get(0)?.as_str().len() == text.len() {
            return money_cents(&c);
        }
    }
    let (whole, frac) = text.split_once('.').unwrap_or((text, ""));
    if whole.is_empty() || !whole.chars().all(|c| c.is_ascii_digit()) || frac.len() > 2 || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let whole: i64 = whole.parse().ok()?;
    let frac: i64 = if frac.is_empty() { 0 } else { format!("{frac:0<2}").parse().ok()? };
    whole.checked_mul(100)?.checked_add(frac)
}

fn money_cents(c: &Captures) -> Option<i64> {
    let (whole, frac) = match (c.get(1), c.get(3)) {
        (Some(w), _) => (w.as_str().replace(',', ""), c.get(2)),
        (None, Some(w)) => (w.as_str().to_string(), c.get(4)),
        _ => return None,
    };
    let whole: i64 = whole.parse().ok()?;
    let frac: i64 = match frac {
        Some(f) => format!("{:0<2}", f.as_str()).parse().ok()?,
        None => 0,
    };
    whole.checked_mul(100)?.checked_add(frac)
}

struct Candidate {
    start: usize,
    end: usize,
    kind: EntityKind,
    normalized: Normalized,
    // lower value wins among equal-length overlapping candidates
    rank: u8,
}

#[derive(Debug, Clone)]
pub struct Recognizer {
    pub locations: Gazetteer,
    pub persons: Gazetteer,
    pub companies: Gazetteer,
    pub nouns: NounLexicon,
    /// Year assumed for dates written without one.
    pub reference_year: i32,
}

impl Default for Recognizer {
    fn default() -> Self {
        Recognizer {
            locations: Gazetteer::locations(),
            persons: Gazetteer::persons(),
            companies: Gazetteer::companies(),
            nouns: NounLexicon::default(),
            reference_year: 2024,
        }
    }
}

impl Recognizer {
    fn date(&self, month: u32, day: u32, year: Option<i32>) -> Option<NaiveDate> {
        NaiveDate::from_ymd_opt(year.unwrap_or(self.reference_year), month, day)
    }

    fn candidates(&self, text: &str) -> Vec<Candidate> {
        let mut out = Vec::new();
        let mut push = |m: regex::Match, kind, normalized, rank| {
            out.push(Candidate {
                start: m.start(),
                end: m.end(),
                kind,
                normalized,
                rank,
            })
        };

        for c in DATETIME_RE.captures_iter(text) {
            let whole = c.get(0).unwrap();
            let parsed = (|| {
                let date = self.date(month_number(c.get(1)?.as_str())?, cap_u32(&c, 2)?, cap_u32(&c, 3).map(|y| y as i32))?;
                let time = clock(cap_u32(&c, 4)?, cap_u32(&c, 5).unwrap_or(0), c.get(6).map(|m| m.as_str()))?;
                Some(NaiveDateTime::new(date, time))
            })();
            if let Some(dt) = parsed {
                push(whole, EntityKind::Time, Normalized::DateTime(dt), 0);
            }
        }
        for c in ISO_DATE_RE.captures_iter(text) {
            let parsed = (|| NaiveDate::from_ymd_opt(cap_u32(&c, 1)? as i32, cap_u32(&c, 2)?, cap_u32(&c, 3)?))();
            if let Some(d) = parsed {
                push(c.get(0).unwrap(), EntityKind::Date, Normalized::Date(d), 1);
            }
        }
        for c in MONTH_DAY_RE.captures_iter(text) {
            let parsed = (|| self.date(month_number(c.get(1)?.as_str())?, cap_u32(&c, 2)?, cap_u32(&c, 3).map(|y| y as i32)))();
            if let Some(d) = parsed {
                push(c.get(0).unwrap(), EntityKind::Date, Normalized::Date(d), 1);
            }
        }
        for c in MONEY_RE.captures_iter(text) {
            if let Some(cents) = money_cents(&c) {
                push(c.get(0).unwrap(), EntityKind::Money, Normalized::Money(cents), 2);
            }
        }
        for c in CLOCK_RE.captures_iter(text) {
            let parsed = if c.get(1).is_some() {
                clock(cap_u32(&c, 1).unwrap_or(99), cap_u32(&c, 2).unwrap_or(0), c.get(3).map(|m| m.as_str()))
            } else {
                clock(cap_u32(&c, 4).unwrap_or(99), cap_u32(&c, 5).unwrap_or(99), None)
            };
            if let Some(t) = parsed {
                push(c.get(0).unwrap(), EntityKind::Time, Normalized::Time(t), 3);
            }
        }
        for (gazetteer, kind, rank) in [
            (&self.locations, EntityKind::Location, 4),
            (&self.persons, EntityKind::Person, 5),
            (&self.companies, EntityKind::Company, 6),
        ] {
            for m in gazetteer.find_iter(text) {
                push(m, kind, Normalized::Text(gazetteer.canonical(m.as_str())), rank);
            }
        }
        for m in NUMBER_RE.find_iter(text) {
            let value = m.as_str().parse::<f64>().ok().or_else(|| word_number(m.as_str()));
            if let Some(v) = value {
                push(m, EntityKind::Number, Normalized::Number(v), 7);
            }
        }
        out
    }

    /// Recognizes entities in `text`. Output is ordered by position and no two
    /// entities overlap.
    pub fn recognize(&self, text: &str) -> Vec<Entity> {
        let mut candidates = self.candidates(text);
        candidates.sort_by(|a, b| {
            (b.end - b.start)
                .cmp(&(a.end - a.start))
                .then(a.start.cmp(&b.start))
                .then(a.rank.cmp(&b.rank))
        });
        let mut claimed: Vec<(usize, usize)> = Vec::new();
        let mut accepted: Vec<Candidate> = Vec::new();
        for c in candidates {
            if claimed.iter().all(|&(s, e)| c.end <= s || c.start >= e) {
                claimed.push((c.start, c.end));
                accepted.push(c);
            }
        }
        for m in WORD_RE.find_iter(text) {
            if claimed.iter().any(|&(s, e)| m.start() < e && m.end() > s) {
                continue;
            }
            if let Some(lemma) = self.nouns.lookup(m.as_str()) {
                claimed.push((m.start(), m.end()));
                accepted.push(Candidate {
                    start: m.start(),
                    end: m.end(),
                    kind: EntityKind::Noun,
                    normalized: Normalized::Text(lemma),
                    rank: 8,
                });
            }
        }
        accepted.sort_by_key(|c| c.start);
        accepted
            .into_iter()
            .map(|c| Entity {
                kind: c.kind,
                surface: text[c.start..c.end].to_string(),
                normalized: c.normalized,
                span: (char_offset(text, c.start), char_offset(text, c.end)),
                cue: preceding_word(&text[..c.start]),
            })
            .collect()
    }

    /// Parses a user's answer to an argument prompt. With no expected kind any
    /// non-empty text is accepted verbatim.
    pub fn parse_answer(&self, answer: &str, expected: Option<EntityKind>) -> Option<Normalized> {
        let answer = answer.trim();
        if answer.is_empty() {
            return None;
        }
        let Some(kind) = expected else {
            return Some(Normalized::Text(answer.to_string()));
        };
        match kind {
            EntityKind::Money => parse_money(answer).map(Normalized::Money),
            EntityKind::Number => answer
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .or_else(|| word_number(answer))
                .map(Normalized::Number),
            EntityKind::Noun => Some(Normalized::Text(answer.to_string())),
            _ => {
                let entities = self.recognize(answer);
                let whole = entities.iter().find(|e| {
                    let covers = e.span == (0, answer.chars().count());
                    covers && (e.kind == kind || (kind == EntityKind::Time && e.kind == EntityKind::Date))
                });
                match whole {
                    Some(e) => Some(e.normalized.clone()),
                    // free-form names are accepted for open-class kinds
                    None if matches!(kind, EntityKind::Location | EntityKind::Person | EntityKind::Company)
                        && answer.chars().any(char::is_alphabetic)
                        && !answer.chars().any(|c| c.is_ascii_digit()) =>
                    {
                        Some(Normalized::Text(answer.to_string()))
                    }
                    None => None,
                }
            }
        }
    }
}

fn char_offset(text: &str, byte: usize) -> usize {
    text[..byte].chars().count()
}

fn preceding_word(prefix: &str) -> Option<String> {
    let trimmed = prefix.trim_end();
    if trimmed.len() == prefix.len() && !prefix.is_empty() {
        // entity starts mid-word
        return None;
    }
    let word: String = trimmed
        .chars()
        .rev()
        .take_while(|c| c.is_alphanumeric())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    (!word.is_empty()).then(|| word.to_lowercase())
}

static DEFAULT_RECOGNIZER: Lazy<Recognizer> = Lazy::new(Recognizer::default);

/// Recognition with the built-in gazetteers and lexicon.
pub fn recognize_entities(text: &str) -> Vec<Entity> {
    DEFAULT_RECOGNIZER.recognize(text)
}

/// Answer parsing with the built-in recognizer.
pub fn parse_answer(answer: &str, expected: Option<EntityKind>) -> Option<Normalized> {
    DEFAULT_RECOGNIZER.parse_answer(answer, expected)
}
