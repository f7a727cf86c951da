use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::lemma::lemmatize_noun;
use super::word_set;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pos {
    Noun,
    ProperNoun,
    Verb,
    Adjective,
    Adverb,
    Pronoun,
    Determiner,
    Function,
    Number,
    Punct,
}

impl Pos {
    pub fn is_word(self) -> bool {
        !matches!(self, Pos::Punct | Pos::Number)
    }

    /// Coarse universal-dependencies style tag, as used in pre-tagged files.
    pub fn as_ud(self) -> &'static str {
        match self {
            Pos::Noun => "NOUN",
            Pos::ProperNoun => "PROPN",
            Pos::Verb => "VERB",
            Pos::Adjective => "ADJ",
            Pos::Adverb => "ADV",
            Pos::Pronoun => "PRON",
            Pos::Determiner => "DET",
            Pos::Function => "ADP",
            Pos::Number => "NUM",
            Pos::Punct => "PUNCT",
        }
    }

    pub fn from_ud(tag: &str) -> Pos {
        match tag.to_ascii_uppercase().as_str() {
            "NOUN" | "NN" | "NNS" => Pos::Noun,
            "PROPN" | "NNP" | "NNPS" => Pos::ProperNoun,
            "VERB" | "AUX" => Pos::Verb,
            "ADJ" => Pos::Adjective,
            "ADV" => Pos::Adverb,
            "PRON" => Pos::Pronoun,
            "DET" => Pos::Determiner,
            "NUM" => Pos::Number,
            "PUNCT" | "SYM" => Pos::Punct,
            _ => Pos::Function,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EntityKind {
    Person,
    Other,
}

impl EntityKind {
    pub fn from_label(label: &str) -> Option<EntityKind> {
        match label.trim() {
            "" | "O" => None,
            l if l.eq_ignore_ascii_case("person") || l.eq_ignore_ascii_case("per") => {
                Some(EntityKind::Person)
            }
            _ => Some(EntityKind::Other),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            EntityKind::Person => "PERSON",
            EntityKind::Other => "ENTITY",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub text: String,
    pub lemma: String,
    pub pos: Pos,
    pub ent: Option<EntityKind>,
}

/// Part-of-speech and named-entity tagging of one tokenized sentence.
///
/// Implementations must be deterministic.
pub trait Tagger: Send + Sync {
    fn tag(&self, tokens: &[String]) -> Vec<TaggedToken>;
}

/// Bundled rule tagger: closed-class word lists, a small verb/adjective
/// lexicon, suffix heuristics and a gazetteer for named entities.
#[derive(Debug, Clone)]
pub struct RuleTagger {
    determiners: HashSet<&'static str>,
    pronouns: HashSet<&'static str>,
    function_words: HashSet<&'static str>,
    verbs: HashSet<String>,
    adjectives: HashSet<&'static str>,
    persons: HashSet<String>,
    entities: HashSet<String>,
}

impl Default for RuleTagger {
    fn default() -> Self {
        Self::new()
    }
}

impl RuleTagger {
    pub fn new() -> Self {
        let mut verbs = HashSet::new();
        for base in word_set(include_str!("../../resources/verbs.txt")) {
            verbs.extend(inflections(base));
        }
        verbs.extend(
            word_set(include_str!("../../resources/irregular_verbs.txt"))
                .into_iter()
                .map(String::from),
        );
        RuleTagger {
            determiners: word_set(include_str!("../../resources/determiners.txt")),
            pronouns: word_set(include_str!("../../resources/pronouns.txt")),
            function_words: word_set(include_str!("../../resources/function_words.txt")),
            verbs,
            adjectives: word_set(include_str!("../../resources/adjectives.txt")),
            persons: word_set(include_str!("../../resources/person_names.txt"))
                .into_iter()
                .map(str::to_lowercase)
                .collect(),
            entities: word_set(include_str!("../../resources/places_orgs.txt"))
                .into_iter()
                .map(str::to_lowercase)
                .collect(),
        }
    }

    /// Add names to the Person gazetteer.
    pub fn with_persons<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.persons
            .extend(names.into_iter().map(|s| s.as_ref().to_lowercase()));
        self
    }

    /// Add names to the non-person entity gazetteer.
    pub fn with_entities<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.entities
            .extend(names.into_iter().map(|s| s.as_ref().to_lowercase()));
        self
    }

    fn tag_one(&self, token: &str, position: usize) -> (Pos, Option<EntityKind>) {
        let first = match token.chars().next() {
            Some(c) => c,
            None => return (Pos::Punct, None),
        };
        if !token.chars().any(char::is_alphanumeric) {
            return (Pos::Punct, None);
        }
        if token.chars().all(|c| c.is_ascii_digit() || c == ',' || c == '.') {
            return (Pos::Number, None);
        }
        let lower = token.to_lowercase();
        let all_caps = token.len() > 1 && token.chars().all(|c| c.is_uppercase());
        if all_caps {
            return (Pos::ProperNoun, Some(EntityKind::Other));
        }
        if first.is_uppercase() {
            if self.persons.contains(&lower) {
                return (Pos::ProperNoun, Some(EntityKind::Person));
            }
            if self.entities.contains(&lower) {
                return (Pos::ProperNoun, Some(EntityKind::Other));
            }
            if position > 0 && !self.is_closed_class(&lower) {
                return (Pos::ProperNoun, Some(EntityKind::Other));
            }
        }
        (self.tag_lower(&lower), None)
    }

    fn is_closed_class(&self, lower: &str) -> bool {
        lower == "i"
            || self.determiners.contains(lower)
            || self.pronouns.contains(lower)
            || self.function_words.contains(lower)
    }

    fn tag_lower(&self, lower: &str) -> Pos {
        if self.determiners.contains(lower) {
            Pos::Determiner
        } else if self.pronouns.contains(lower) {
            Pos::Pronoun
        } else if self.function_words.contains(lower) || lower.ends_with("n't") {
            Pos::Function
        } else if self.verbs.contains(lower) {
            Pos::Verb
        } else if self.adjectives.contains(lower) {
            Pos::Adjective
        } else if lower.len() > 4 && lower.ends_with("ly") {
            Pos::Adverb
        } else if ["ous", "ful", "ive", "able", "ible", "ical", "less", "ish"]
            .iter()
            .any(|s| lower.len() > s.len() + 2 && lower.ends_with(s))
        {
            Pos::Adjective
        } else if lower.len() > 5
            && (lower.ends_with("ing") || lower.ends_with("ed"))
            && !lower.ends_with("eed")
        {
            Pos::Verb
        } else {
            Pos::Noun
        }
    }
}

impl Tagger for RuleTagger {
    fn tag(&self, tokens: &[String]) -> Vec<TaggedToken> {
        tokens
            .iter()
            .enumerate()
            .map(|(i, tok)| {
                let (pos, ent) = self.tag_one(tok, i);
                let lower = tok.to_lowercase();
                let lemma = if pos == Pos::Noun {
                    lemmatize_noun(&lower)
                } else {
                    lower
                };
                TaggedToken {
                    text: tok.clone(),
                    lemma,
                    pos,
                    ent,
                }
            })
            .collect()
    }
}

fn inflections(base: &str) -> Vec<String> {
    let mut out = vec![base.to_string()];
    let stem_e = base.strip_suffix('e');
    let third = if base.ends_with('s')
        || base.ends_with('x')
        || base.ends_with("ch")
        || base.ends_with("sh")
        || base.ends_with('o')
    {
        format!("{base}es")
    } else if let Some(stem) = consonant_y(base) {
        format!("{stem}ies")
    } else {
        format!("{base}s")
    };
    out.push(third);
    match stem_e {
        Some(stem) => {
            out.push(format!("{base}d"));
            out.push(format!("{stem}ing"));
        }
        None => {
            if let Some(stem) = consonant_y(base) {
                out.push(format!("{stem}ied"));
            } else {
                out.push(format!("{base}ed"));
            }
            out.push(format!("{base}ing"));
            // doubled final consonant: stop -> stopped, stopping
            let b = base.as_bytes();
            if b.len() >= 3 {
                let vowel = |c: u8| b"aeiou".contains(&c);
                let (x, y, z) = (b[b.len() - 3], b[b.len() - 2], b[b.len() - 1]);
                if !vowel(x) && vowel(y) && !vowel(z) && !b"wxy".contains(&z) {
                    let last = z as char;
                    out.push(format!("{base}{last}ed"));
                    out.push(format!("{base}{last}ing"));
                }
            }
        }
    }
    out
}

fn consonant_y(base: &str) -> Option<&str> {
    let stem = base.strip_suffix('y')?;
    match stem.chars().last() {
        Some(c) if !"aeiou".contains(c) => Some(stem),
        _ => None,
    }
}
