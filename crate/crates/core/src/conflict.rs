//! Conflict mathematics over TD-sentiment vectors.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sentiment::TdSentimentVector;

/// Default cut for calling a single interaction conflicting.
pub const DEFAULT_TAU: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConflictScore {
    pub value: f64,
    pub common_terms: usize,
}

/// Conflict factor between two documents.
///
/// Each term contributes `min(a, b, 1) * |a - b|`: nothing unless both
/// documents mention it, 1 for neutral against polar, 2 for opposite
/// polarity. Symmetric in its arguments.
pub fn conflict_factor(a: &TdSentimentVector, b: &TdSentimentVector) -> Result<ConflictScore> {
    conflict_factor_values(a.values(), b.values())
}

pub fn conflict_factor_values(a: &[u8], b: &[u8]) -> Result<ConflictScore> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let (sum, common) = a
        .iter()
        .zip(b)
        .filter(|(x, y)| **x != 0 && **y != 0)
        .fold((0u32, 0usize), |(s, c), (x, y)| (s + x.abs_diff(*y) as u32, c + 1));
    Ok(ConflictScore {
        value: f64::from(sum),
        common_terms: common,
    })
}

/// Mean conflict factor between an article and each of its comments.
pub fn news_conflict_score(
    article: &TdSentimentVector,
    comments: &[TdSentimentVector],
) -> Result<f64> {
    if comments.is_empty() {
        return Err(Error::EmptyInput("comment list"));
    }
    let mut total = 0.0;
    for c in comments {
        total += conflict_factor(article, c)?.value;
    }
    Ok(total / comments.len() as f64)
}

/// Affine min-max map of a batch onto `[lo, hi]`. A constant batch maps
/// to `lo`.
pub fn normalize_scores(scores: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
    if !(hi > lo) {
        return Err(Error::invalid(format!("empty interval [{lo}, {hi}]")));
    }
    if scores.is_empty() {
        return Err(Error::EmptyInput("scores"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores"));
    }
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return Ok(vec![lo; scores.len()]);
    }
    Ok(scores
        .iter()
        .map(|s| lo + (s - min) / (max - min) * (hi - lo))
        .collect())
}

/// Conflict per common term, in `[0, 2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedConflict {
    pub value: f64,
    /// False when the documents share no term (value is then 0).
    pub defined: bool,
}

pub fn normalized_pair_conflict(
    a: &TdSentimentVector,
    b: &TdSentimentVector,
) -> Result<NormalizedConflict> {
    Ok(normalize_by_common(conflict_factor(a, b)?))
}

pub fn normalize_by_common(cf: ConflictScore) -> NormalizedConflict {
    if cf.common_terms == 0 {
        NormalizedConflict {
            value: 0.0,
            defined: false,
        }
    } else {
        NormalizedConflict {
            value: cf.value / cf.common_terms as f64,
            defined: true,
        }
    }
}

/// Engagement state of a user pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PairState {
    /// No engagement.
    None = 0,
    /// Only non-conflicting engagements.
    Peaceful = 1,
    /// Only conflicting engagements.
    Conflicting = 2,
    /// Both kinds: preferential conflict.
    Mixed = 3,
}

impl PairState {
    pub fn code(self) -> u8 {
        self as u8
    }
}

pub fn pair_state(history: &[f64], tau: f64) -> Result<PairState> {
    if !(tau >= 0.0) {
        return Err(Error::invalid(format!("conflict threshold {tau} must be >= 0")));
    }
    if history.is_empty() {
        return Ok(PairState::None);
    }
    let conflicting = history.iter().filter(|cf| **cf >= tau).count();
    Ok(match conflicting {
        0 => PairState::Peaceful,
        n if n == history.len() => PairState::Conflicting,
        _ => PairState::Mixed,
    })
}

/// One row of the pairwise scores export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub doc_a: String,
    pub doc_b: String,
    pub cf: f64,
    pub common_terms: usize,
    pub cf_normalized: f64,
}

impl ScoreRow {
    pub fn new(doc_a: &str, doc_b: &str, cf: ConflictScore) -> Self {
        ScoreRow {
            doc_a: doc_a.to_string(),
            doc_b: doc_b.to_string(),
            cf: cf.value,
            common_terms: cf.common_terms,
            cf_normalized: normalize_by_common(cf).value,
        }
    }
}

/// Write `doc_a,doc_b,cf,common_terms,cf_normalized`.
pub fn write_scores_csv<W: Write>(writer: W, rows: &[ScoreRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if rows.is_empty() {
        w.write_record(["doc_a", "doc_b", "cf", "common_terms", "cf_normalized"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(Error::Stream)?;
    Ok(())
}
