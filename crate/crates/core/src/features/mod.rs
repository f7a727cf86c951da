//! Article features, per-user node features and user-pair features.

mod lexicon;
mod pair;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sentiment::{Polarity, PolarityLexicon, TdSentimentVector};
use crate::terms::CorpusStats;
use crate::text::{split_sentences, word_tokens};

pub use lexicon::{Embeddings, SubjectivityLexicon, WordList};
pub use pair::{
    pair_features, top_sources, user_node_features, user_target_sentiment, FeatureMask,
    History, HistoryComment, HistoryInteraction, HistoryView, PairFeatures, UserNodeFeatures,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolarityCounts {
    pub positive: usize,
    pub negative: usize,
    pub neutral: usize,
}

/// Positive and negative lexicon hits; every other token counts as neutral.
pub fn polarity_counts<S: AsRef<str>>(tokens: &[S], lexicon: &PolarityLexicon) -> PolarityCounts {
    let mut c = PolarityCounts::default();
    for t in tokens {
        match lexicon.get(t.as_ref()) {
            Some(Polarity::Positive) => c.positive += 1,
            Some(Polarity::Negative) => c.negative += 1,
            None => c.neutral += 1,
        }
    }
    c
}

/// `(1/|T|) Σ tf (ln|T| − ln tf)` over the document's term frequencies,
/// where `vocab_size` is `|T|`. Zero frequencies contribute nothing.
pub fn cumulative_entropy<I>(term_freqs: I, vocab_size: usize) -> Result<f64>
where
    I: IntoIterator<Item = usize>,
{
    if vocab_size == 0 {
        return Err(Error::invalid("vocabulary size must be at least 1"));
    }
    let ln_t = (vocab_size as f64).ln();
    let sum: f64 = term_freqs
        .into_iter()
        .filter(|&tf| tf > 0)
        .map(|tf| tf as f64 * (ln_t - (tf as f64).ln()))
        .sum();
    Ok(sum / vocab_size as f64)
}

/// Share of tokens found in `list`; 0 for an empty token slice.
pub fn lexicon_fraction<S: AsRef<str>>(tokens: &[S], list: &WordList) -> f64 {
    if tokens.is_empty() {
        return 0.0;
    }
    let hits = tokens.iter().filter(|t| list.contains(t.as_ref())).count();
    hits as f64 / tokens.len() as f64
}

fn token_counts<S: AsRef<str>>(tokens: &[S]) -> BTreeMap<&str, usize> {
    let mut counts = BTreeMap::new();
    for t in tokens {
        *counts.entry(t.as_ref()).or_default() += 1;
    }
    counts
}

/// Tf-idf weighted mean of the embeddings of in-vocabulary tokens.
///
/// Tokens never seen by `stats` get document frequency 1. When every weight
/// is zero (each token occurs in every document) the plain mean is used.
/// No in-vocabulary token gives the zero vector.
pub fn latent_semantics<S: AsRef<str>>(
    tokens: &[S],
    embeddings: &Embeddings,
    stats: &CorpusStats,
) -> Vec<f64> {
    let d = embeddings.dim();
    let mut weighted = vec![0.0; d];
    let mut plain = vec![0.0; d];
    let (mut total_w, mut total_n) = (0.0, 0usize);
    let n_docs = stats.doc_count.max(1) as f64;
    for (tok, tf) in token_counts(tokens) {
        let Some(vec) = embeddings.get(tok) else { continue };
        let df = stats.df(tok).max(1) as f64;
        let w = tf as f64 * (n_docs / df).ln().max(0.0);
        for k in 0..d {
            weighted[k] += w * vec[k];
            plain[k] += tf as f64 * vec[k];
        }
        total_w += w;
        total_n += tf;
    }
    if total_w > 0.0 {
        weighted.iter_mut().for_each(|x| *x /= total_w);
        weighted
    } else if total_n > 0 {
        plain.iter_mut().for_each(|x| *x /= total_n as f64);
        plain
    } else {
        vec![0.0; d]
    }
}

/// Words of more than this many characters count as long for LIX.
pub const LIX_LONG_WORD: usize = 6;

/// LIX from raw counts: words per sentence plus percentage of long words.
pub fn lix_index(words: usize, sentences: usize, long_words: usize) -> Result<f64> {
    if words == 0 || sentences == 0 {
        return Err(Error::EmptyInput("text for readability"));
    }
    Ok(words as f64 / sentences as f64 + 100.0 * long_words as f64 / words as f64)
}

/// Gunning Fog from average sentence length and percentage of complex words.
pub fn gunning_fog(avg_sentence_len: f64, pct_complex: f64) -> f64 {
    0.4 * (avg_sentence_len + pct_complex)
}

/// Number of maximal vowel runs, a syllable estimate.
pub fn vowel_groups(word: &str) -> usize {
    let mut groups = 0;
    let mut in_group = false;
    for c in word.chars() {
        let v = matches!(c.to_ascii_lowercase(), 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
        if v && !in_group {
            groups += 1;
        }
        in_group = v;
    }
    groups
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Readability {
    pub lix: f64,
    pub fog: f64,
}

/// LIX and Gunning Fog of raw text. Complex words have at least three
/// vowel groups.
pub fn readability(text: &str) -> Result<Readability> {
    let sentences: Vec<Vec<String>> = split_sentences(text)
        .into_iter()
        .map(word_tokens)
        .filter(|w| !w.is_empty())
        .collect();
    let words: Vec<&String> = sentences.iter().flatten().collect();
    let long = words.iter().filter(|w| w.chars().count() > LIX_LONG_WORD).count();
    let lix = lix_index(words.len(), sentences.len(), long)?;
    let complex = words.iter().filter(|w| vowel_groups(w) >= 3).count();
    let asl = words.len() as f64 / sentences.len() as f64;
    let pcw = 100.0 * complex as f64 / words.len() as f64;
    Ok(Readability {
        lix,
        fog: gunning_fog(asl, pcw),
    })
}

/// Mean lexicon weight over tokens present in the lexicon; 0 when none are.
pub fn subjectivity<S: AsRef<str>>(tokens: &[S], lexicon: &SubjectivityLexicon) -> f64 {
    let weights: Vec<f64> = tokens.iter().filter_map(|t| lexicon.get(t.as_ref())).collect();
    if weights.is_empty() {
        0.0
    } else {
        weights.iter().sum::<f64>() / weights.len() as f64
    }
}

/// Read-only resources shared by every feature computation.
#[derive(Debug, Clone, Default)]
pub struct FeatureResources {
    pub polarity: PolarityLexicon,
    pub controversy: WordList,
    pub bias: WordList,
    pub subjectivity: SubjectivityLexicon,
    pub embeddings: Option<Embeddings>,
    /// Token document frequencies used for latent-semantic weights.
    pub token_stats: CorpusStats,
    /// Number of distinct tokens in the corpus, `|T|` of the entropy.
    pub vocab_size: usize,
}

impl FeatureResources {
    /// Fill `token_stats` and `vocab_size` from the corpus documents.
    pub fn with_corpus<S: AsRef<str>>(mut self, docs: &[S]) -> Self {
        let tokens: Vec<Vec<String>> = docs.iter().map(|d| word_tokens(d.as_ref())).collect();
        self.token_stats = CorpusStats::from_tokens(tokens.iter());
        self.vocab_size = self.token_stats.doc_freq.len();
        self
    }

    pub fn embedding_dim(&self) -> usize {
        self.embeddings.as_ref().map_or(0, Embeddings::dim)
    }
}

/// Number of scalar fields after the TD-sentiment block and the latent
/// block: three polarity counts, entropy, two lexicon fractions, LIX, Fog
/// and subjectivity.
pub const SCALAR_FEATURES: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleFeatures {
    pub td: Vec<u8>,
    pub polarity: PolarityCounts,
    pub entropy: f64,
    pub controversy: f64,
    pub bias: f64,
    pub latent: Vec<f64>,
    pub lix: f64,
    pub fog: f64,
    pub subjectivity: f64,
}

impl ArticleFeatures {
    pub fn len(&self) -> usize {
        self.td.len() + self.latent.len() + SCALAR_FEATURES
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat vector: TD block, polarity counts (positive, negative,
    /// neutral), entropy, controversy, bias, latent block, LIX, Fog,
    /// subjectivity.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend(self.td.iter().map(|&x| f64::from(x)));
        v.push(self.polarity.positive as f64);
        v.push(self.polarity.negative as f64);
        v.push(self.polarity.neutral as f64);
        v.push(self.entropy);
        v.push(self.controversy);
        v.push(self.bias);
        v.extend_from_slice(&self.latent);
        v.push(self.lix);
        v.push(self.fog);
        v.push(self.subjectivity);
        v
    }

    /// Column names matching [`ArticleFeatures::to_vec`].
    pub fn column_names(terms: &[String], latent_dim: usize) -> Vec<String> {
        let mut names: Vec<String> = terms.iter().map(|t| format!("td:{t}")).collect();
        for n in ["pos_count", "neg_count", "neu_count", "entropy", "controversy", "bias"] {
            names.push(n.to_string());
        }
        names.extend((0..latent_dim).map(|k| format!("latent:{k}")));
        for n in ["lix", "fog", "subjectivity"] {
            names.push(n.to_string());
        }
        names
    }
}

fn text_features(
    text: &str,
    td: &TdSentimentVector,
    res: &FeatureResources,
    strict: bool,
) -> Result<ArticleFeatures> {
    let tokens = word_tokens(text);
    let readability = match readability(text) {
        Ok(r) => r,
        Err(e) if strict => return Err(e),
        Err(_) => Readability { lix: 0.0, fog: 0.0 },
    };
    let counts = token_counts(&tokens);
    Ok(ArticleFeatures {
        td: td.values().to_vec(),
        polarity: polarity_counts(&tokens, &res.polarity),
        entropy: cumulative_entropy(counts.values().copied(), res.vocab_size.max(1))?,
        controversy: lexicon_fraction(&tokens, &res.controversy),
        bias: lexicon_fraction(&tokens, &res.bias),
        latent: match &res.embeddings {
            Some(e) => latent_semantics(&tokens, e, &res.token_stats),
            None => Vec::new(),
        },
        lix: readability.lix,
        fog: readability.fog,
        subjectivity: subjectivity(&tokens, &res.subjectivity),
    })
}

/// Feature vector of one article given its TD-sentiment vector. Text
/// without any word is a readability error.
pub fn article_features(
    text: &str,
    td: &TdSentimentVector,
    res: &FeatureResources,
) -> Result<ArticleFeatures> {
    text_features(text, td, res, true)
}

/// Same layout for a comment; readability of a wordless comment is 0.
pub fn comment_features(
    text: &str,
    td: &TdSentimentVector,
    res: &FeatureResources,
) -> Result<ArticleFeatures> {
    text_features(text, td, res, false)
}
