use std::collections::HashSet;
use std::io;
use std::path::Path;

use regex::Regex;

const NOUNS: &str = include_str!("../../data/nouns.txt");
const LOCATIONS: &str = include_str!("../../data/locations.txt");
const PERSONS: &str = include_str!("../../data/persons.txt");
const COMPANIES: &str = include_str!("../../data/companies.txt");

fn entries(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

// Suffixes that mark a word as a noun when the lexicon does not know it.
const NOUN_SUFFIXES: [&str; 10] = [
    "tion", "sion", "ment", "ness", "ity", "ance", "ence", "ship", "ism", "ist",
];

#[derive(Debug, Clone)]
pub struct NounLexicon {
    lemmas: HashSet<String>,
}

impl Default for NounLexicon {
    fn default() -> Self {
        NounLexicon::from_text(NOUNS)
    }
}

impl NounLexicon {
    pub fn from_text(text: &str) -> Self {
        NounLexicon {
            lemmas: entries(text).map(str::to_lowercase).collect(),
        }
    }

    pub fn load(path: &Path) -> io::Result<Self> {
        Ok(NounLexicon::from_text(&std::fs::read_to_string(path)?))
    }

    fn singular_forms(word: &str) -> Vec<String> {
        let mut forms = vec![word.to_string()];
        if let Some(stem) = word.strip_suffix("ies") {
            forms.push(format!("{stem}y"));
        }
        if let Some(stem) = word.strip_suffix("es") {
            forms.push(stem.to_string());
        }
        if !word.ends_with("ss") {
            if let Some(stem) = word.strip_suffix('s') {
                forms.push(stem.to_string());
            }
        }
        forms
    }

    /// Lemma of `word` if the lexicon knows it in any inflection.
    pub fn lookup(&self, word: &str) -> Option<String> {
        let lower = word.to_lowercase();
        NounLexicon::singular_forms(&lower)
            .into_iter()
            .find(|f| self.lemmas.contains(f))
    }

    /// Lexicon lookup, falling back to derivational suffixes.
    pub fn noun_lemma(&self, word: &str) -> Option<String> {
        if let Some(lemma) = self.lookup(word) {
            return Some(lemma);
        }
        let lower = word.to_lowercase();
        let singular = match lower.strip_suffix('s') {
            Some(stem) if !lower.ends_with("ss") => stem.to_string(),
            _ => lower.clone(),
        };
        let looks_nominal = singular.len() >= 6
            && singular.chars().all(|c| c.is_ascii_alphabetic())
            && NOUN_SUFFIXES.iter().any(|s| singular.ends_with(s));
        looks_nominal.then_some(singular)
    }
}

/// Surface forms of one entity kind, matched case-insensitively on word
/// boundaries, longest form first.
#[derive(Debug, Clone)]
pub struct Gazetteer {
    forms: Vec<String>,
    pattern: Option<Regex>,
}

impl Gazetteer {
    pub fn from_text(text: &str) -> Self {
        Gazetteer::from_forms(entries(text).map(str::to_string).collect())
    }

    pub fn load(path: &Path) -> io::Result<Self> {
        Ok(Gazetteer::from_text(&std::fs::read_to_string(path)?))
    }

    pub fn from_forms(mut forms: Vec<String>) -> Self {
        forms.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        forms.dedup();
        let pattern = (!forms.is_empty()).then(|| {
            let alternatives: Vec<String> = forms.iter().map(|f| regex::escape(f)).collect();
            Regex::new(&format!(r"(?i)\b(?:{})\b", alternatives.join("|"))).expect("escaped alternatives")
        });
        Gazetteer { forms, pattern }
    }

    pub fn locations() -> Self {
        Gazetteer::from_text(LOCATIONS)
    }

    pub fn persons() -> Self {
        Gazetteer::from_text(PERSONS)
    }

    pub fn companies() -> Self {
        Gazetteer::from_text(COMPANIES)
    }

    /// Canonical spelling of a matched surface.
    pub fn canonical(&self, surface: &str) -> String {
        self.forms
            .iter()
            .find(|f| f.eq_ignore_ascii_case(surface))
            .cloned()
            .unwrap_or_else(|| surface.to_string())
    }

    pub(crate) fn find_iter<'t>(&'t self, text: &'t str) -> impl Iterator<Item = regex::Match<'t>> + 't {
        self.pattern.iter().flat_map(move |re| re.find_iter(text))
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }
}
