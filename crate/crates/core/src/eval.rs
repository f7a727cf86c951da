//! Evaluation metrics: regression errors, ranking quality, ROC-AUC and
//! Fleiss' kappa.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub mse: f64,
    pub rmse: f64,
    pub smape: f64,
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch {
            expected: a,
            actual: b,
        });
    }
    if a == 0 {
        return Err(Error::EmptyInput("metric input"));
    }
    Ok(())
}

/// MSE, RMSE and sMAPE. sMAPE uses the halved denominator
/// `(|y| + |ŷ|) / 2`, with `0/0` counted as 0, so it lies in `[0, 2]`.
pub fn regression_metrics(y_true: &[f64], y_pred: &[f64]) -> Result<RegressionMetrics> {
    check_lengths(y_true.len(), y_pred.len())?;
    let n = y_true.len() as f64;
    let mse = y_true
        .iter()
        .zip(y_pred)
        .map(|(y, p)| (y - p) * (y - p))
        .sum::<f64>()
        / n;
    let smape = y_true
        .iter()
        .zip(y_pred)
        .map(|(y, p)| {
            let denom = (y.abs() + p.abs()) / 2.0;
            if denom == 0.0 {
                0.0
            } else {
                (y - p).abs() / denom
            }
        })
        .sum::<f64>()
        / n;
    Ok(RegressionMetrics {
        mse,
        rmse: mse.sqrt(),
        smape,
    })
}

/// Items of one query ordered by descending predicted score.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    relevance: Vec<bool>,
}

impl RankedList {
    /// Relevance flags already in ranked order.
    pub fn from_ranked(relevance: Vec<bool>) -> Self {
        RankedList { relevance }
    }

    /// Sort `(score, relevant)` pairs by descending score. Equal scores keep
    /// their input order.
    pub fn from_scores(mut items: Vec<(f64, bool)>) -> Self {
        items.sort_by(|a, b| b.0.total_cmp(&a.0));
        RankedList {
            relevance: items.into_iter().map(|(_, r)| r).collect(),
        }
    }

    pub fn relevance(&self) -> &[bool] {
        &self.relevance
    }

    pub fn has_relevant(&self) -> bool {
        self.relevance.iter().any(|r| *r)
    }

    /// Mean of precision@k over the ranks k of relevant items.
    pub fn average_precision(&self) -> Option<f64> {
        let mut hits = 0usize;
        let mut sum = 0.0;
        for (k, rel) in self.relevance.iter().enumerate() {
            if *rel {
                hits += 1;
                sum += hits as f64 / (k + 1) as f64;
            }
        }
        (hits > 0).then(|| sum / hits as f64)
    }

    pub fn reciprocal_rank(&self) -> Option<f64> {
        self.relevance
            .iter()
            .position(|r| *r)
            .map(|k| 1.0 / (k + 1) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingMetrics {
    pub map: f64,
    pub mrr: f64,
    pub lists: usize,
    /// Lists without any relevant item, excluded from both means.
    pub skipped: usize,
}

pub fn ranking_metrics(lists: &[RankedList]) -> Result<RankingMetrics> {
    let usable: Vec<&RankedList> = lists.iter().filter(|l| l.has_relevant()).collect();
    let skipped = lists.len() - usable.len();
    if skipped > 0 {
        log::warn!("{skipped} ranked list(s) without a relevant item excluded");
    }
    if usable.is_empty() {
        return Err(Error::EmptyInput("ranked lists with a relevant item"));
    }
    let n = usable.len() as f64;
    let map = usable.iter().filter_map(|l| l.average_precision()).sum::<f64>() / n;
    let mrr = usable.iter().filter_map(|l| l.reciprocal_rank()).sum::<f64>() / n;
    Ok(RankingMetrics {
        map,
        mrr,
        lists: usable.len(),
        skipped,
    })
}

fn class_counts(labels: &[bool]) -> (usize, usize) {
    let pos = labels.iter().filter(|l| **l).count();
    (pos, labels.len() - pos)
}

/// ROC-AUC as the probability that a random positive outscores a random
/// negative, ties counting one half. Computed from mid-ranks in
/// `O(n log n)`.
pub fn roc_auc(labels: &[bool], scores: &[f64]) -> Result<f64> {
    check_lengths(labels.len(), scores.len())?;
    let (n_pos, n_neg) = class_counts(labels);
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("scores"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // count, for each positive, negatives strictly below plus half the tied ones
    let mut concordant = 0.0f64;
    let mut neg_below = 0usize;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let group = &order[i..j];
        let (gp, gn) = class_counts(&group.iter().map(|&k| labels[k]).collect::<Vec<_>>());
        concordant += gp as f64 * (neg_below as f64 + 0.5 * gn as f64);
        neg_below += gn;
        i = j;
    }
    Ok(concordant / (n_pos as f64 * n_neg as f64))
}

/// ROC points `(fpr, tpr)` from the strictest threshold to the loosest,
/// one point per distinct score, starting at `(0, 0)`.
pub fn roc_curve(labels: &[bool], scores: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_lengths(labels.len(), scores.len())?;
    let (n_pos, n_neg) = class_counts(labels);
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }
    Ok(points)
}

/// Area under a piecewise-linear curve by the trapezoid rule.
pub fn trapezoid_area(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    /// `None` when only one class is present.
    pub auc: Option<f64>,
    pub accuracy: f64,
}

/// AUC plus accuracy of `score >= threshold` as the positive prediction.
pub fn classification_metrics(
    labels: &[u8],
    scores: &[f64],
    threshold: f64,
) -> Result<ClassificationMetrics> {
    check_lengths(labels.len(), scores.len())?;
    if let Some(l) = labels.iter().find(|l| **l > 1) {
        return Err(Error::invalid(format!("label {l} is not 0 or 1")));
    }
    let flags: Vec<bool> = labels.iter().map(|l| *l == 1).collect();
    let correct = flags
        .iter()
        .zip(scores)
        .filter(|(y, s)| (**s >= threshold) == **y)
        .count();
    let auc = match roc_auc(&flags, scores) {
        Ok(a) => Some(a),
        Err(Error::SingleClass) => None,
        Err(e) => return Err(e),
    };
    Ok(ClassificationMetrics {
        auc,
        accuracy: correct as f64 / labels.len() as f64,
    })
}

/// Fleiss' kappa for an items × categories matrix of rating counts. Every
/// item must have the same number of raters (at least two).
pub fn fleiss_kappa(ratings: &[Vec<usize>]) -> Result<f64> {
    let n_items = ratings.len();
    if n_items == 0 {
        return Err(Error::EmptyInput("rating matrix"));
    }
    let k = ratings[0].len();
    let raters: usize = ratings[0].iter().sum();
    if raters < 2 {
        return Err(Error::invalid("at least two raters per item are required"));
    }
    for (i, row) in ratings.iter().enumerate() {
        if row.len() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                actual: row.len(),
            });
        }
        if row.iter().sum::<usize>() != raters {
            return Err(Error::invalid(format!("item {i} has a different number of raters")));
        }
    }
    let n = raters as f64;
    let total = n_items as f64 * n;
    let p_bar = ratings
        .iter()
        .map(|row| {
            let agree: f64 = row.iter().map(|&c| (c * c) as f64).sum::<f64>() - n;
            agree / (n * (n - 1.0))
        })
        .sum::<f64>()
        / n_items as f64;
    let p_e: f64 = (0..k)
        .map(|j| {
            let pj = ratings.iter().map(|r| r[j]).sum::<usize>() as f64 / total;
            pj * pj
        })
        .sum();
    if (1.0 - p_e).abs() < 1e-15 {
        return Err(Error::Undefined("Fleiss' kappa"));
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// One `metrics.json` record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub task: String,
    pub metric: String,
    pub value: f64,
    pub n: usize,
}

impl MetricRecord {
    pub fn new(task: &str, metric: &str, value: f64, n: usize) -> Self {
        MetricRecord {
            task: task.to_string(),
            metric: metric.to_string(),
            value,
            n,
        }
    }
}

pub fn write_metrics_json<W: Write>(mut writer: W, records: &[MetricRecord]) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, records)?;
    writer.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_examples() {
        let m = regression_metrics(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!((m.mse, m.rmse, m.smape), (0.0, 0.0, 0.0));
        assert_eq!(regression_metrics(&[10.0], &[0.0]).unwrap().smape, 2.0);
        assert_eq!(regression_metrics(&[0.0], &[0.0]).unwrap().smape, 0.0);
        let m = regression_metrics(&[1.0, 3.0], &[2.0, 1.0]).unwrap();
        assert_eq!(m.mse, 2.5);
        assert_eq!(m.rmse * m.rmse, m.mse.sqrt() * m.mse.sqrt());
        assert!(regression_metrics(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn ranking_examples() {
        let perfect = RankedList::from_ranked(vec![true, true, false]);
        let m = ranking_metrics(&[perfect]).unwrap();
        assert_eq!((m.map, m.mrr), (1.0, 1.0));

        let second = RankedList::from_ranked(vec![false, true]);
        assert_eq!(second.average_precision(), Some(0.5));
        assert_eq!(second.reciprocal_rank(), Some(0.5));

        let third = RankedList::from_ranked(vec![false, false, true]);
        assert!((third.reciprocal_rank().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn lists_without_relevant_items_are_skipped() {
        let m = ranking_metrics(&[
            RankedList::from_ranked(vec![false, false]),
            RankedList::from_ranked(vec![true]),
        ])
        .unwrap();
        assert_eq!(m.skipped, 1);
        assert_eq!(m.map, 1.0);
        assert!(ranking_metrics(&[RankedList::from_ranked(vec![false])]).is_err());
    }

    #[test]
    fn from_scores_sorts_descending() {
        let l = RankedList::from_scores(vec![(0.1, true), (0.9, false), (0.5, true)]);
        assert_eq!(l.relevance(), &[false, true, true]);
    }

    #[test]
    fn auc_examples() {
        let m = classification_metrics(&[0, 0, 1, 1], &[0.1, 0.2, 0.8, 0.9], 0.5).unwrap();
        assert_eq!(m.auc, Some(1.0));
        assert_eq!(m.accuracy, 1.0);
        let m = classification_metrics(&[0, 1, 0, 1], &[0.3; 4], 0.5).unwrap();
        assert_eq!(m.auc, Some(0.5));
        let m = classification_metrics(&[1, 0, 1], &[0.9, 0.8, 0.3], 0.5).unwrap();
        assert_eq!(m.auc, Some(0.5));
    }

    #[test]
    fn single_class_still_reports_accuracy() {
        let m = classification_metrics(&[1, 1], &[0.9, 0.2], 0.5).unwrap();
        assert_eq!(m.auc, None);
        assert_eq!(m.accuracy, 0.5);
        assert!(matches!(roc_auc(&[true, true], &[0.1, 0.2]), Err(Error::SingleClass)));
    }

    #[test]
    fn roc_curve_ends_at_one_one() {
        let c = roc_curve(&[true, false, true, false], &[0.9, 0.7, 0.7, 0.1]).unwrap();
        assert_eq!(c.first(), Some(&(0.0, 0.0)));
        assert_eq!(c.last(), Some(&(1.0, 1.0)));
        assert!((trapezoid_area(&c) - 0.875).abs() < 1e-15);
    }

    #[test]
    fn kappa_unanimous_is_one() {
        let r = vec![vec![3, 0, 0], vec![0, 3, 0], vec![0, 0, 3]];
        assert_eq!(fleiss_kappa(&r).unwrap(), 1.0);
    }

    #[test]
    fn kappa_split_raters_is_negative() {
        let r = vec![vec![2, 2]; 6];
        assert!(fleiss_kappa(&r).unwrap() < 0.0);
    }

    #[test]
    fn kappa_all_in_one_category_is_undefined() {
        let r = vec![vec![4, 0], vec![4, 0]];
        assert!(matches!(fleiss_kappa(&r), Err(Error::Undefined(_))));
    }

    #[test]
    fn kappa_rejects_ragged_raters() {
        assert!(fleiss_kappa(&[vec![2, 1], vec![1, 1]]).is_err());
    }

    #[test]
    fn metrics_json_shape() {
        let mut buf = Vec::new();
        write_metrics_json(&mut buf, &[MetricRecord::new("t", "auc", 0.5, 4)]).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v[0]["task"], "t");
        assert_eq!(v[0]["n"], 4);
    }
}
