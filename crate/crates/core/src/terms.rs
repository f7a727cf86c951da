//! Corpus-wide keyword set: pronoun substitution, noun candidates, tf-idf
//! ranking, and the final ordered [`TermSet`].

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{EntityKind, Pos, TaggedDocument, TaggedToken, Tagger};

/// Fraction of non-entity candidates kept after tf-idf ranking.
pub const KEEP_FRACTION: f64 = 0.6;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Stopwords(words.into_iter().map(|w| w.as_ref().trim().to_lowercase()).collect())
    }

    /// The bundled English list.
    pub fn english() -> Self {
        Self::new(
            include_str!("../resources/stopwords.txt")
                .lines()
                .filter(|l| !l.trim().is_empty()),
        )
    }

    /// One token per line; blank lines and `#` comments ignored.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut words = HashSet::new();
        for line in reader.lines() {
            let line = line?;
            let w = line.trim();
            if !w.is_empty() && !w.starts_with('#') {
                words.insert(w.to_lowercase());
            }
        }
        Ok(Stopwords(words))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }
}

/// A maximal run of entity-tagged tokens within a sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub kind: EntityKind,
    pub surface: String,
}

pub fn entity_spans(sentence: &[TaggedToken]) -> Vec<EntitySpan> {
    let mut spans = Vec::new();
    let mut i = 0;
    while i < sentence.len() {
        if sentence[i].ent.is_none() {
            i += 1;
            continue;
        }
        let start = i;
        let mut kind = EntityKind::Other;
        while i < sentence.len() && sentence[i].ent.is_some() {
            if sentence[i].ent == Some(EntityKind::Person) {
                kind = EntityKind::Person;
            }
            i += 1;
        }
        let surface = sentence[start..i]
            .iter()
            .map(|t| t.text.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        spans.push(EntitySpan {
            start,
            end: i,
            kind,
            surface,
        });
    }
    spans
}

fn is_gendered_pronoun(text: &str) -> bool {
    text.eq_ignore_ascii_case("he") || text.eq_ignore_ascii_case("she")
}

/// Replace each standalone `he`/`she` with the surface form of the most
/// recent preceding Person entity in the document. Tokens with no
/// antecedent are left unchanged.
pub fn resolve_pronouns(doc: &TaggedDocument) -> TaggedDocument {
    let mut last_person: Option<String> = None;
    let mut sentences = Vec::with_capacity(doc.sentences.len());
    for sentence in &doc.sentences {
        let spans = entity_spans(sentence);
        let mut out = Vec::with_capacity(sentence.len());
        let mut i = 0;
        while i < sentence.len() {
            if let Some(span) = spans.iter().find(|s| s.start == i) {
                out.extend_from_slice(&sentence[span.start..span.end]);
                if span.kind == EntityKind::Person {
                    last_person = Some(span.surface.clone());
                }
                i = span.end;
                continue;
            }
            let tok = &sentence[i];
            match (&last_person, is_gendered_pronoun(&tok.text)) {
                (Some(name), true) => {
                    let parts: Vec<&str> = name.split(' ').collect();
                    for part in parts {
                        out.push(TaggedToken {
                            text: part.to_string(),
                            lemma: part.to_lowercase(),
                            pos: Pos::ProperNoun,
                            ent: Some(EntityKind::Person),
                        });
                    }
                }
                _ => out.push(tok.clone()),
            }
            i += 1;
        }
        sentences.push(out);
    }
    TaggedDocument {
        id: doc.id.clone(),
        sentences,
    }
}

/// Text-level convenience over [`resolve_pronouns`].
pub fn resolve_pronouns_text(text: &str, tagger: &dyn Tagger) -> String {
    resolve_pronouns(&TaggedDocument::from_text("", text, tagger)).render()
}

/// One occurrence of a candidate term inside a document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermOccurrence {
    pub term: String,
    pub sentence: usize,
    /// First token of the occurrence.
    pub token: usize,
    pub len: usize,
    pub is_entity: bool,
}

/// Candidate term occurrences: lemmatized nouns (stopwords removed) and
/// named-entity spans, in document order.
pub fn term_occurrences(doc: &TaggedDocument, stopwords: &Stopwords) -> Vec<TermOccurrence> {
    let mut out = Vec::new();
    for (si, sentence) in doc.sentences.iter().enumerate() {
        let spans = entity_spans(sentence);
        let mut i = 0;
        while i < sentence.len() {
            if let Some(span) = spans.iter().find(|s| s.start == i) {
                out.push(TermOccurrence {
                    term: span.surface.to_lowercase(),
                    sentence: si,
                    token: span.start,
                    len: span.end - span.start,
                    is_entity: true,
                });
                i = span.end;
                continue;
            }
            let tok = &sentence[i];
            if matches!(tok.pos, Pos::Noun | Pos::ProperNoun) {
                let lemma = tok.lemma.to_lowercase();
                if !lemma.is_empty()
                    && lemma.chars().any(char::is_alphabetic)
                    && !stopwords.contains(&lemma)
                {
                    out.push(TermOccurrence {
                        term: lemma,
                        sentence: si,
                        token: i,
                        len: 1,
                        is_entity: false,
                    });
                }
            }
            i += 1;
        }
    }
    out
}

/// Multiset of candidate terms for one document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Candidates {
    pub counts: BTreeMap<String, usize>,
    pub entities: BTreeSet<String>,
}

pub fn candidate_terms(doc: &TaggedDocument, stopwords: &Stopwords) -> Candidates {
    let mut c = Candidates::default();
    for occ in term_occurrences(doc, stopwords) {
        if occ.is_entity {
            c.entities.insert(occ.term.clone());
        }
        *c.counts.entry(occ.term).or_default() += 1;
    }
    c
}

/// Document frequencies over a collection of term-count maps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusStats {
    pub doc_count: usize,
    pub doc_freq: HashMap<String, usize>,
}

impl CorpusStats {
    pub fn from_counts<'a, I>(docs: I) -> Self
    where
        I: IntoIterator<Item = &'a BTreeMap<String, usize>>,
    {
        let mut stats = CorpusStats::default();
        for doc in docs {
            stats.doc_count += 1;
            for (term, &n) in doc {
                if n > 0 {
                    *stats.doc_freq.entry(term.clone()).or_default() += 1;
                }
            }
        }
        stats
    }

    /// Build from token sequences (each distinct token counted once per doc).
    pub fn from_tokens<'a, I, D>(docs: I) -> Self
    where
        I: IntoIterator<Item = D>,
        D: IntoIterator<Item = &'a String>,
    {
        let mut stats = CorpusStats::default();
        for doc in docs {
            stats.doc_count += 1;
            let distinct: HashSet<&String> = doc.into_iter().collect();
            for t in distinct {
                *stats.doc_freq.entry(t.clone()).or_default() += 1;
            }
        }
        stats
    }

    pub fn df(&self, term: &str) -> usize {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }

    /// Natural-log inverse document frequency `ln(N / df)`.
    pub fn idf(&self, term: &str) -> Result<f64> {
        match self.df(term) {
            0 => Err(Error::UnseenTerm(term.to_string())),
            df => Ok((self.doc_count as f64 / df as f64).ln()),
        }
    }
}

/// Raw term frequency times natural-log idf; 0 when the term is absent from
/// the document.
pub fn tfidf(term: &str, doc_counts: &BTreeMap<String, usize>, stats: &CorpusStats) -> Result<f64> {
    let idf = stats.idf(term)?;
    let tf = doc_counts.get(term).copied().unwrap_or(0);
    Ok(tf as f64 * idf)
}

/// Ordered corpus-wide keyword set. Index = position in TD-sentiment vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSet {
    terms: Vec<String>,
    is_named_entity: Vec<bool>,
    doc_freq: Vec<usize>,
    corpus_doc_count: usize,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TermRow {
    index: usize,
    term: String,
    is_named_entity: bool,
    doc_freq: usize,
    corpus_doc_count: usize,
}

impl TermSet {
    pub fn from_parts(
        terms: Vec<String>,
        is_named_entity: Vec<bool>,
        doc_freq: Vec<usize>,
        corpus_doc_count: usize,
    ) -> Result<Self> {
        if terms.len() != is_named_entity.len() || terms.len() != doc_freq.len() {
            return Err(Error::LengthMismatch {
                expected: terms.len(),
                actual: is_named_entity.len().min(doc_freq.len()),
            });
        }
        let mut index = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate term `{t}`")));
            }
        }
        Ok(TermSet {
            terms,
            is_named_entity,
            doc_freq,
            corpus_doc_count,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, i: usize) -> &str {
        &self.terms[i]
    }

    pub fn is_named_entity(&self, i: usize) -> bool {
        self.is_named_entity[i]
    }

    pub fn doc_freq(&self, i: usize) -> usize {
        self.doc_freq[i]
    }

    pub fn corpus_doc_count(&self) -> usize {
        self.corpus_doc_count
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for i in 0..self.len() {
            w.serialize(TermRow {
                index: i,
                term: self.terms[i].clone(),
                is_named_entity: self.is_named_entity[i],
                doc_freq: self.doc_freq[i],
                corpus_doc_count: self.corpus_doc_count,
            })?;
        }
        w.flush().map_err(Error::Stream)?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let (mut terms, mut ne, mut df) = (Vec::new(), Vec::new(), Vec::new());
        let mut n_docs = 0;
        for (expected, row) in r.deserialize::<TermRow>().enumerate() {
            let row = row?;
            if row.index != expected {
                return Err(Error::Malformed {
                    what: "term set",
                    detail: format!("row {expected} has index {}", row.index),
                });
            }
            terms.push(row.term);
            ne.push(row.is_named_entity);
            df.push(row.doc_freq);
            n_docs = row.corpus_doc_count;
        }
        Self::from_parts(terms, ne, df, n_docs)
    }
}

/// Build T: every named entity plus the top `ceil(0.6 n)` of the `n`
/// remaining candidates, ranked by their maximum tf-idf over documents
/// (ties broken lexicographically).
///
/// Entities come first in lexicographic order, followed by the kept
/// candidates in rank order. The result does not depend on document order.
pub fn build_term_set(docs: &[TaggedDocument], stopwords: &Stopwords) -> Result<TermSet> {
    if docs.is_empty() {
        return Err(Error::EmptyInput("corpus"));
    }
    let candidates: Vec<Candidates> = docs.iter().map(|d| candidate_terms(d, stopwords)).collect();
    term_set_from_candidates(&candidates)
}

pub fn term_set_from_candidates(candidates: &[Candidates]) -> Result<TermSet> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput("corpus"));
    }
    let stats = CorpusStats::from_counts(candidates.iter().map(|c| &c.counts));
    let entities: BTreeSet<&String> = candidates.iter().flat_map(|c| c.entities.iter()).collect();

    let mut best: BTreeMap<&String, f64> = BTreeMap::new();
    for c in candidates {
        for term in c.counts.keys() {
            if entities.contains(term) {
                continue;
            }
            let score = tfidf(term, &c.counts, &stats)?;
            let slot = best.entry(term).or_insert(f64::NEG_INFINITY);
            if score > *slot {
                *slot = score;
            }
        }
    }
    let mut ranked: Vec<(&String, f64)> = best.into_iter().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let keep = keep_count(ranked.len());

    let mut terms = Vec::new();
    let mut is_ne = Vec::new();
    for e in &entities {
        terms.push((*e).clone());
        is_ne.push(true);
    }
    for (t, _) in ranked.into_iter().take(keep) {
        terms.push(t.clone());
        is_ne.push(false);
    }
    let df = terms.iter().map(|t| stats.df(t)).collect();
    TermSet::from_parts(terms, is_ne, df, stats.doc_count)
}

/// `ceil(0.6 n)`, computed in integers.
pub fn keep_count(n: usize) -> usize {
    (n * 3).div_ceil(5)
}
