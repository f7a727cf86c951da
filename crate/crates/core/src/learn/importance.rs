use std::collections::BTreeMap;

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_xy, LassoModel, Regressor};
use crate::error::{Error, Result};

/// Number of shuffles averaged per group.
pub const PERMUTATION_REPEATS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupImportance {
    pub group: String,
    pub score: f64,
}

fn ranked(scores: BTreeMap<&str, f64>) -> Vec<GroupImportance> {
    let mut out: Vec<GroupImportance> = scores
        .into_iter()
        .map(|(g, score)| GroupImportance {
            group: g.to_string(),
            score,
        })
        .collect();
    out.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.group.cmp(&b.group)));
    out
}

/// Mass of standardized Lasso coefficients per group, highest first.
/// `groups[k]` names the group of column `k`.
pub fn lasso_group_importance(model: &LassoModel, groups: &[String]) -> Result<Vec<GroupImportance>> {
    if groups.len() != model.standardized.len() {
        return Err(Error::LengthMismatch {
            expected: model.standardized.len(),
            actual: groups.len(),
        });
    }
    let mut scores: BTreeMap<&str, f64> = BTreeMap::new();
    for (g, b) in groups.iter().zip(&model.standardized) {
        *scores.entry(g).or_default() += b.abs();
    }
    Ok(ranked(scores))
}

fn mse(model: &dyn Regressor, x: ArrayView2<f64>, y: &[f64]) -> f64 {
    model
        .predict(x)
        .iter()
        .zip(y)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / y.len() as f64
}

/// Increase in mean squared error when a group's columns are shuffled
/// together across rows, averaged over [`PERMUTATION_REPEATS`] shuffles.
pub fn permutation_importance(
    model: &dyn Regressor,
    x: ArrayView2<f64>,
    y: &[f64],
    groups: &[String],
    seed: u64,
) -> Result<Vec<GroupImportance>> {
    check_xy(x, y)?;
    if groups.len() != x.ncols() {
        return Err(Error::LengthMismatch {
            expected: x.ncols(),
            actual: groups.len(),
        });
    }
    let base = mse(model, x, y);
    let mut columns: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (k, g) in groups.iter().enumerate() {
        columns.entry(g).or_default().push(k);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scores = BTreeMap::new();
    let mut order: Vec<usize> = (0..y.len()).collect();
    for (g, cols) in columns {
        let mut total = 0.0;
        for _ in 0..PERMUTATION_REPEATS {
            order.shuffle(&mut rng);
            let mut xp = x.to_owned();
            for &c in &cols {
                for (r, &src) in order.iter().enumerate() {
                    xp[[r, c]] = x[[src, c]];
                }
            }
            total += mse(model, xp.view(), y) - base;
        }
        scores.insert(g, total / PERMUTATION_REPEATS as f64);
    }
    Ok(ranked(scores))
}
