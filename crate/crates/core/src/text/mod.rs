//! Tokenization, sentence splitting, lemmatization and part-of-speech tagging.
//!
//! Everything here is deterministic and dependency-free so that the pipeline
//! runs without an external language model. A [`Tagger`] can be swapped for
//! pre-tagged input (see [`pretagged`]).

mod lemma;
pub mod pretagged;
mod tagger;

use std::collections::HashSet;
use std::sync::OnceLock;

pub use lemma::lemmatize_noun;
pub use tagger::{EntityKind, Pos, RuleTagger, TaggedToken, Tagger};

/// A document after sentence splitting and tagging.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedDocument {
    pub id: String,
    pub sentences: Vec<Vec<TaggedToken>>,
}

impl TaggedDocument {
    /// Split, tokenize and tag raw text.
    pub fn from_text(id: impl Into<String>, text: &str, tagger: &dyn Tagger) -> Self {
        let sentences = split_sentences(text)
            .into_iter()
            .map(|s| {
                let tokens: Vec<String> = tokenize(s);
                tagger.tag(&tokens)
            })
            .filter(|s| !s.is_empty())
            .collect();
        TaggedDocument {
            id: id.into(),
            sentences,
        }
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    /// Lowercased word tokens (punctuation and numbers dropped).
    pub fn words(&self) -> Vec<String> {
        self.sentences
            .iter()
            .flatten()
            .filter(|t| t.pos.is_word())
            .map(|t| t.text.to_lowercase())
            .collect()
    }

    /// Re-assemble the text: tokens joined by spaces, no space before
    /// closing punctuation.
    pub fn render(&self) -> String {
        self.sentences
            .iter()
            .map(|s| render_tokens(s.iter().map(|t| t.text.as_str())))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

pub(crate) fn render_tokens<'a>(tokens: impl Iterator<Item = &'a str>) -> String {
    let mut out = String::new();
    for tok in tokens {
        let attach = tok.chars().all(|c| ".,!?;:)]}'\"%".contains(c));
        if !out.is_empty() && !attach {
            out.push(' ');
        }
        out.push_str(tok);
    }
    out
}

fn abbreviations() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| word_set(include_str!("../../resources/abbreviations.txt")))
}

pub(crate) fn word_set(src: &'static str) -> HashSet<&'static str> {
    src.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

/// Split text into sentences on `.`, `!` or `?` followed by whitespace.
///
/// A period does not end a sentence when the word before it is a bundled
/// abbreviation (`Mr.`, `U.S.`, ...) or a single-letter initial.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if matches!(b, b'.' | b'!' | b'?') {
            // absorb runs like "?!" or "..." and closing quotes
            let mut end = i + 1;
            while end < bytes.len() && matches!(bytes[end], b'.' | b'!' | b'?' | b'"' | b'\'' | b')')
            {
                end += 1;
            }
            let at_boundary = end >= bytes.len() || bytes[end].is_ascii_whitespace();
            if at_boundary && !(b == b'.' && end == i + 1 && is_abbreviation(&text[start..i])) {
                let s = text[start..end].trim();
                if !s.is_empty() {
                    out.push(s);
                }
                start = end;
            }
            i = end;
        } else {
            i += 1;
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

fn is_abbreviation(before: &str) -> bool {
    let word = before
        .rsplit(|c: char| c.is_whitespace() || c == '(' || c == '"')
        .next()
        .unwrap_or("");
    if word.is_empty() {
        return false;
    }
    let mut chars = word.chars();
    if let (Some(c), None) = (chars.next(), chars.next()) {
        return c.is_uppercase();
    }
    abbreviations().contains(word.to_lowercase().as_str())
}

/// Split a sentence into word and punctuation tokens.
///
/// Words are runs of alphanumeric characters with internal apostrophes or
/// hyphens; each other non-space character is its own token.
pub fn tokenize(sentence: &str) -> Vec<String> {
    let chars: Vec<char> = sentence.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_alphanumeric() {
            let start = i;
            while i < chars.len() {
                let d = chars[i];
                let joiner = (d == '\'' || d == '’' || d == '-')
                    && i + 1 < chars.len()
                    && chars[i + 1].is_alphanumeric();
                if d.is_alphanumeric() || (joiner && i > start) {
                    i += 1;
                } else {
                    break;
                }
            }
            let word: String = chars[start..i].iter().collect();
            out.push(word.replace('’', "'"));
        } else {
            out.push(c.to_string());
            i += 1;
        }
    }
    out
}

/// Lowercased word tokens of raw text, punctuation removed.
pub fn word_tokens(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| t.chars().any(char::is_alphabetic))
        .map(|t| t.to_lowercase())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_terminal_punctuation() {
        assert_eq!(
            split_sentences("John arrived. He spoke! Did he? Yes."),
            vec!["John arrived.", "He spoke!", "Did he?", "Yes."]
        );
    }

    #[test]
    fn abbreviations_do_not_split() {
        assert_eq!(
            split_sentences("Mr. Smith met Dr. Jones in the U.S. today. Then left."),
            vec!["Mr. Smith met Dr. Jones in the U.S. today.", "Then left."]
        );
        assert_eq!(split_sentences("J. Doe wrote it."), vec!["J. Doe wrote it."]);
    }

    #[test]
    fn period_without_space_is_not_a_boundary() {
        assert_eq!(split_sentences("version 2.5 is out"), vec!["version 2.5 is out"]);
    }

    #[test]
    fn tokenizer_keeps_contractions_and_splits_punctuation() {
        assert_eq!(
            tokenize("I don't like well-known U.S. policy, really!"),
            vec!["I", "don't", "like", "well-known", "U", ".", "S", ".", "policy", ",", "really", "!"]
        );
    }

    #[test]
    fn render_reattaches_punctuation() {
        let toks = ["John", "arrived", ".", "He", "said", ",", "fine", "!"];
        assert_eq!(render_tokens(toks.iter().copied()), "John arrived. He said, fine!");
    }

    #[test]
    fn empty_text_has_no_sentences() {
        assert!(split_sentences("   ").is_empty());
        assert!(tokenize("").is_empty());
    }
}
