//! Target-dependent sentiment: per-occurrence class probabilities and their
//! aggregation into a document's TD-sentiment vector.
//!
//! Labels: `0` term absent, `1` negative, `2` neutral, `3` positive.

use std::collections::HashMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::terms::{term_occurrences, Stopwords, TermOccurrence, TermSet};
use crate::text::{TaggedDocument, TaggedToken};

pub const ABSENT: u8 = 0;
pub const NEGATIVE: u8 = 1;
pub const NEUTRAL: u8 = 2;
pub const POSITIVE: u8 = 3;

/// Components closer than this are treated as tied by the argmax.
pub const TIE_EPSILON: f64 = 1e-12;

/// Negation cues that flip a lexicon hit within two tokens before it.
/// Contractions ending in `n't` are treated the same way.
pub const NEGATIONS: [&str; 3] = ["not", "never", "no"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TdProbability {
    pub p_negative: f64,
    pub p_neutral: f64,
    pub p_positive: f64,
}

impl TdProbability {
    pub fn new(p_negative: f64, p_neutral: f64, p_positive: f64) -> Result<Self> {
        let p = TdProbability {
            p_negative,
            p_neutral,
            p_positive,
        };
        let parts = [p_negative, p_neutral, p_positive];
        if parts.iter().any(|x| !x.is_finite() || *x < 0.0 || *x > 1.0) {
            return Err(Error::invalid(format!("probability out of [0,1]: {parts:?}")));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("probabilities do not sum to 1: {parts:?}")));
        }
        Ok(p)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.p_negative, self.p_neutral, self.p_positive]
    }

    pub fn label(&self) -> u8 {
        argmax_label(self.as_array())
    }
}

/// Map `[neg, neu, pos]` scores to a label; ties go to neutral, then
/// negative.
pub fn argmax_label(scores: [f64; 3]) -> u8 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied = |x: f64| (max - x).abs() <= TIE_EPSILON;
    if tied(scores[1]) {
        NEUTRAL
    } else if tied(scores[0]) {
        NEGATIVE
    } else {
        POSITIVE
    }
}

/// Average occurrence probabilities, then take the argmax. `None` when
/// there are no occurrences.
pub fn aggregate_probabilities(probs: &[TdProbability]) -> Option<u8> {
    if probs.is_empty() {
        return None;
    }
    let n = probs.len() as f64;
    let mut sum = [0.0; 3];
    for p in probs {
        for (s, x) in sum.iter_mut().zip(p.as_array()) {
            *s += x;
        }
    }
    Some(argmax_label(sum.map(|s| s / n)))
}

/// Aggregate sentiment of one document towards every term of T.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TdSentimentVector {
    values: Vec<u8>,
}

impl TdSentimentVector {
    pub fn zeros(len: usize) -> Self {
        TdSentimentVector { values: vec![0; len] }
    }

    pub fn from_values(values: Vec<u8>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| **v > POSITIVE) {
            return Err(Error::invalid(format!("TD-sentiment value {v} outside 0..=3")));
        }
        Ok(TdSentimentVector { values })
    }

    /// Build from `(index, value)` pairs of the nonzero entries.
    pub fn from_sparse(len: usize, entries: &[(usize, u8)]) -> Result<Self> {
        let mut v = Self::zeros(len);
        for &(i, x) in entries {
            if i >= len {
                return Err(Error::LengthMismatch {
                    expected: len,
                    actual: i + 1,
                });
            }
            v.values[i] = x;
        }
        Self::from_values(v.values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn get(&self, i: usize) -> u8 {
        self.values[i]
    }

    /// Nonzero entries as `(index, value)`.
    pub fn sparse(&self) -> Vec<(usize, u8)> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != ABSENT)
            .map(|(i, v)| (i, *v))
            .collect()
    }

    /// Indices of terms present in the document.
    pub fn support(&self) -> Vec<usize> {
        self.sparse().into_iter().map(|(i, _)| i).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

/// `token<TAB>pos|neg`. A token listed with both polarities is positive.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolarityLexicon {
    entries: HashMap<String, Polarity>,
}

impl PolarityLexicon {
    pub fn new<I, S>(positive: I, negative: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut entries = HashMap::new();
        for w in negative {
            entries.insert(w.as_ref().to_lowercase(), Polarity::Negative);
        }
        for w in positive {
            entries.insert(w.as_ref().to_lowercase(), Polarity::Positive);
        }
        PolarityLexicon { entries }
    }

    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let (mut pos, mut neg) = (Vec::new(), Vec::new());
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (tok, pol) = line.split_once('\t').ok_or_else(|| Error::Malformed {
                what: "polarity lexicon",
                detail: format!("line {} has no tab", n + 1),
            })?;
            match pol.trim() {
                "pos" => pos.push(tok.trim().to_string()),
                "neg" => neg.push(tok.trim().to_string()),
                other => {
                    return Err(Error::Malformed {
                        what: "polarity lexicon",
                        detail: format!("line {}: unknown polarity `{other}`", n + 1),
                    })
                }
            }
        }
        Ok(Self::new(pos, neg))
    }

    pub fn get(&self, token: &str) -> Option<Polarity> {
        self.entries.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn is_negation(token: &str) -> bool {
    NEGATIONS.contains(&token) || token.ends_with("n't")
}

/// Additive smoothing applied to each class count.
const SMOOTHING: f64 = 0.01;

/// Lexicon-based TD sentiment for the target at `target_index`.
///
/// Counts positive and negative lexicon words within `window` tokens of the
/// target; a negation cue one or two tokens before a hit flips it. Without
/// hits the neutral class carries the mass.
pub fn lexicon_td_sentiment<S: AsRef<str>>(
    sentence: &[S],
    target_index: usize,
    lexicon: &PolarityLexicon,
    window: usize,
) -> Result<TdProbability> {
    lexicon_td_sentiment_span(sentence, target_index, 1, lexicon, window)
}

fn lexicon_td_sentiment_span<S: AsRef<str>>(
    sentence: &[S],
    target_start: usize,
    target_len: usize,
    lexicon: &PolarityLexicon,
    window: usize,
) -> Result<TdProbability> {
    if sentence.is_empty() {
        return Err(Error::EmptyInput("sentence"));
    }
    if target_start + target_len > sentence.len() || target_len == 0 {
        return Err(Error::invalid(format!(
            "target {target_start}+{target_len} outside sentence of {} tokens",
            sentence.len()
        )));
    }
    if window == 0 {
        return Err(Error::invalid("window must be at least 1"));
    }
    let lower: Vec<String> = sentence.iter().map(|t| t.as_ref().to_lowercase()).collect();
    let lo = target_start.saturating_sub(window);
    let hi = (target_start + target_len - 1 + window).min(lower.len() - 1);
    let (mut pos, mut neg) = (0usize, 0usize);
    for i in lo..=hi {
        if (target_start..target_start + target_len).contains(&i) {
            continue;
        }
        let Some(mut polarity) = lexicon.get(&lower[i]) else { continue };
        let negated = (1..=2).any(|k| i >= k && is_negation(&lower[i - k]));
        if negated {
            polarity = match polarity {
                Polarity::Positive => Polarity::Negative,
                Polarity::Negative => Polarity::Positive,
            };
        }
        match polarity {
            Polarity::Positive => pos += 1,
            Polarity::Negative => neg += 1,
        }
    }
    let neutral = if pos + neg == 0 { 1.0 } else { 0.0 };
    let raw = [neg as f64 + SMOOTHING, neutral + SMOOTHING, pos as f64 + SMOOTHING];
    let total: f64 = raw.iter().sum();
    TdProbability::new(raw[0] / total, raw[1] / total, raw[2] / total)
}

/// Source of per-occurrence TD-sentiment probabilities.
pub trait TdProvider: Send + Sync {
    fn probability(
        &self,
        doc_id: &str,
        sentence: &[TaggedToken],
        occurrence: &TermOccurrence,
    ) -> Result<TdProbability>;
}

/// Default provider backed by [`lexicon_td_sentiment`].
#[derive(Debug, Clone)]
pub struct LexiconProvider {
    pub lexicon: PolarityLexicon,
    pub window: usize,
}

impl LexiconProvider {
    pub fn new(lexicon: PolarityLexicon) -> Self {
        LexiconProvider { lexicon, window: 5 }
    }
}

impl TdProvider for LexiconProvider {
    fn probability(
        &self,
        _doc_id: &str,
        sentence: &[TaggedToken],
        occ: &TermOccurrence,
    ) -> Result<TdProbability> {
        let words: Vec<&str> = sentence.iter().map(|t| t.text.as_str()).collect();
        lexicon_td_sentiment_span(&words, occ.token, occ.len, &self.lexicon, self.window)
    }
}

#[derive(Debug, Deserialize)]
struct ScoreRecord {
    doc_id: String,
    term: String,
    p_neg: f64,
    p_neu: f64,
    p_pos: f64,
}

/// Externally computed scores (`td_scores.jsonl`) that override a fallback
/// provider for specific `(document, term)` pairs.
#[derive(Debug, Clone)]
pub struct OverrideProvider<P> {
    scores: HashMap<(String, String), TdProbability>,
    fallback: P,
}

impl<P: TdProvider> OverrideProvider<P> {
    pub fn new(fallback: P) -> Self {
        OverrideProvider {
            scores: HashMap::new(),
            fallback,
        }
    }

    pub fn insert(&mut self, doc_id: &str, term: &str, p: TdProbability) {
        self.scores.insert((doc_id.to_string(), term.to_lowercase()), p);
    }

    /// Load `{"doc_id","term","p_neg","p_neu","p_pos"}` records; the first
    /// record for a pair wins. Returns the number of rejected lines.
    pub fn read_jsonl<R: BufRead>(&mut self, reader: R) -> Result<usize> {
        let mut rejected = 0;
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed = serde_json::from_str::<ScoreRecord>(&line)
                .map_err(Error::from)
                .and_then(|r| Ok((TdProbability::new(r.p_neg, r.p_neu, r.p_pos)?, r)));
            match parsed {
                Ok((p, r)) => {
                    self.scores
                        .entry((r.doc_id, r.term.to_lowercase()))
                        .or_insert(p);
                }
                Err(e) => {
                    log::warn!("rejected td score line: {e}");
                    rejected += 1;
                }
            }
        }
        Ok(rejected)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

impl<P: TdProvider> TdProvider for OverrideProvider<P> {
    fn probability(
        &self,
        doc_id: &str,
        sentence: &[TaggedToken],
        occ: &TermOccurrence,
    ) -> Result<TdProbability> {
        match self.scores.get(&(doc_id.to_string(), occ.term.clone())) {
            Some(p) => Ok(*p),
            None => self.fallback.probability(doc_id, sentence, occ),
        }
    }
}

/// Per-term occurrence probabilities of one document, keyed by term index.
pub fn occurrence_probabilities(
    doc: &TaggedDocument,
    terms: &TermSet,
    provider: &dyn TdProvider,
) -> Result<Vec<(usize, Vec<TdProbability>)>> {
    let mut per_term: HashMap<usize, Vec<TdProbability>> = HashMap::new();
    for occ in term_occurrences(doc, &Stopwords::default()) {
        let Some(idx) = terms.index_of(&occ.term) else { continue };
        let p = provider.probability(&doc.id, &doc.sentences[occ.sentence], &occ)?;
        per_term.entry(idx).or_default().push(p);
    }
    let mut out: Vec<_> = per_term.into_iter().collect();
    out.sort_by_key(|(i, _)| *i);
    Ok(out)
}

/// TD-sentiment vector of a document: for each term of T that occurs,
/// the argmax of the mean occurrence probability; 0 elsewhere.
pub fn aggregate_sentiment(
    doc: &TaggedDocument,
    terms: &TermSet,
    provider: &dyn TdProvider,
) -> Result<TdSentimentVector> {
    let mut v = TdSentimentVector::zeros(terms.len());
    for (idx, probs) in occurrence_probabilities(doc, terms, provider)? {
        if let Some(label) = aggregate_probabilities(&probs) {
            v.values[idx] = label;
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::build_term_set;
    use crate::text::RuleTagger;

    fn lexicon() -> PolarityLexicon {
        PolarityLexicon::new(vec!["good", "great", "fair"], vec!["bad", "corrupt", "great"])
    }

    fn p(a: f64, b: f64, c: f64) -> TdProbability {
        TdProbability::new(a, b, c).unwrap()
    }

    #[test]
    fn no_polar_word_is_neutral() {
        let r = lexicon_td_sentiment(&["the", "tax", "plan"], 1, &lexicon(), 5).unwrap();
        assert!(r.p_neutral > 0.97 && r.p_negative < 0.02 && r.p_positive < 0.02);
        assert_eq!(r.label(), NEUTRAL);
    }

    #[test]
    fn single_positive_hit() {
        let r = lexicon_td_sentiment(&["a", "good", "plan"], 2, &lexicon(), 5).unwrap();
        assert_eq!(r.label(), POSITIVE);
    }

    #[test]
    fn negation_flips() {
        let r = lexicon_td_sentiment(&["not", "good", "x"], 2, &lexicon(), 5).unwrap();
        assert_eq!(r.label(), NEGATIVE);
        let r = lexicon_td_sentiment(&["never", "a", "bad", "x"], 3, &lexicon(), 5).unwrap();
        assert_eq!(r.label(), POSITIVE);
        let r = lexicon_td_sentiment(&["isn't", "good", "x"], 2, &lexicon(), 5).unwrap();
        assert_eq!(r.label(), NEGATIVE);
    }

    #[test]
    fn hits_outside_window_are_ignored() {
        let s = ["good", "a", "b", "c", "x"];
        assert_eq!(lexicon_td_sentiment(&s, 4, &lexicon(), 3).unwrap().label(), NEUTRAL);
        assert_eq!(lexicon_td_sentiment(&s, 4, &lexicon(), 4).unwrap().label(), POSITIVE);
    }

    #[test]
    fn positive_wins_lexicon_conflicts() {
        assert_eq!(lexicon().get("great"), Some(Polarity::Positive));
    }

    #[test]
    fn empty_sentence_is_an_error() {
        let empty: [&str; 0] = [];
        assert!(lexicon_td_sentiment(&empty, 0, &lexicon(), 5).is_err());
    }

    #[test]
    fn probabilities_are_validated() {
        assert!(TdProbability::new(0.5, 0.5, 0.5).is_err());
        assert!(TdProbability::new(-0.1, 0.6, 0.5).is_err());
        assert!(TdProbability::new(0.2, 0.3, 0.5).is_ok());
    }

    #[test]
    fn mean_then_argmax() {
        let label = aggregate_probabilities(&[p(0.6, 0.3, 0.1), p(0.2, 0.2, 0.6)]);
        assert_eq!(label, Some(NEGATIVE));
        assert_eq!(aggregate_probabilities(&[p(0.1, 0.8, 0.1)]), Some(NEUTRAL));
        assert_eq!(aggregate_probabilities(&[]), None);
    }

    #[test]
    fn ties_prefer_neutral_then_negative() {
        assert_eq!(argmax_label([0.4, 0.4, 0.2]), NEUTRAL);
        assert_eq!(argmax_label([0.2, 0.4, 0.4]), NEUTRAL);
        assert_eq!(argmax_label([0.45, 0.1, 0.45]), NEGATIVE);
        assert_eq!(argmax_label([1.0 / 3.0; 3]), NEUTRAL);
    }

    #[test]
    fn sparse_round_trip_and_bounds() {
        let v = TdSentimentVector::from_sparse(5, &[(1, 3), (4, 1)]).unwrap();
        assert_eq!(v.values(), &[0, 3, 0, 0, 1]);
        assert_eq!(v.sparse(), vec![(1, 3), (4, 1)]);
        assert!(TdSentimentVector::from_sparse(2, &[(2, 1)]).is_err());
        assert!(TdSentimentVector::from_values(vec![4]).is_err());
    }

    struct Constant(TdProbability);

    impl TdProvider for Constant {
        fn probability(&self, _: &str, _: &[TaggedToken], _: &TermOccurrence) -> Result<TdProbability> {
            Ok(self.0)
        }
    }

    #[test]
    fn document_vector_support_and_constant_provider() {
        let tagger = RuleTagger::new();
        let docs = vec![
            TaggedDocument::from_text("a", "The tax plan is good. Immigration is a bad policy.", &tagger),
            TaggedDocument::from_text("b", "Bridges and roads need money.", &tagger),
        ];
        let ts = build_term_set(&docs, &Stopwords::english()).unwrap();
        let v = aggregate_sentiment(&docs[0], &ts, &Constant(p(0.1, 0.2, 0.7))).unwrap();
        let present: Vec<usize> = crate::terms::candidate_terms(&docs[0], &Stopwords::english())
            .counts
            .keys()
            .filter_map(|t| ts.index_of(t))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        assert_eq!(v.support(), present);
        assert!(v.sparse().iter().all(|(_, x)| *x == POSITIVE));
    }

    #[test]
    fn lexicon_provider_on_document() {
        let tagger = RuleTagger::new();
        let doc = TaggedDocument::from_text("a", "Immigration is not good. The economy is great.", &tagger);
        let ts = build_term_set(std::slice::from_ref(&doc), &Stopwords::english()).unwrap();
        let v = aggregate_sentiment(&doc, &ts, &LexiconProvider::new(lexicon())).unwrap();
        if let Some(i) = ts.index_of("immigration") {
            assert_eq!(v.get(i), NEGATIVE);
        }
        if let Some(i) = ts.index_of("economy") {
            assert_eq!(v.get(i), POSITIVE);
        }
    }

    #[test]
    fn override_provider_takes_precedence() {
        let tagger = RuleTagger::new();
        let doc = TaggedDocument::from_text("d1", "The tax is good.", &tagger);
        let ts = build_term_set(std::slice::from_ref(&doc), &Stopwords::english()).unwrap();
        let mut prov = OverrideProvider::new(LexiconProvider::new(lexicon()));
        let rejected = prov
            .read_jsonl(
                "{\"doc_id\":\"d1\",\"term\":\"tax\",\"p_neg\":0.9,\"p_neu\":0.05,\"p_pos\":0.05}\nbad\n"
                    .as_bytes(),
            )
            .unwrap();
        assert_eq!(rejected, 1);
        let v = aggregate_sentiment(&doc, &ts, &prov).unwrap();
        assert_eq!(v.get(ts.index_of("tax").unwrap()), NEGATIVE);
    }
}
