use once_cell::sync::Lazy;

use super::NounLexicon;

static DEFAULT_LEXICON: Lazy<NounLexicon> = Lazy::new(NounLexicon::default);

impl NounLexicon {
    /// Nouns of `description` in order of first appearance, as lemmas.
    pub fn extract(&self, description: &str) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for word in description.split(|c: char| !c.is_alphabetic()).filter(|w| !w.is_empty()) {
            if let Some(lemma) = self.noun_lemma(word) {
                if !out.contains(&lemma) {
                    out.push(lemma);
                }
            }
        }
        out
    }
}

/// Noun extraction with the built-in lexicon.
pub fn extract_nouns(description: &str) -> Vec<String> {
    DEFAULT_LEXICON.extract(description)
}
