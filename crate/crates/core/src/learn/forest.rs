use ndarray::ArrayView2;
use rand::seq::{index::sample, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_xy, Regressor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Draw each tree's rows with replacement.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: 12,
            min_leaf: 2,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// CART regression tree stored as a flat node array, root first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

struct Builder<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [f64],
    max_depth: usize,
    min_leaf: usize,
    mtry: usize,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl Builder<'_> {
    fn mean(&self, rows: &[usize]) -> f64 {
        rows.iter().map(|&r| self.y[r]).sum::<f64>() / rows.len() as f64
    }

    /// Largest SSE reduction over thresholds of one feature.
    fn best_for_feature(&self, rows: &[usize], k: usize) -> Option<BestSplit> {
        let mut sorted: Vec<(f64, f64)> = rows.iter().map(|&r| (self.x[[r, k]], self.y[r])).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let n = sorted.len();
        let total: f64 = sorted.iter().map(|p| p.1).sum();
        let parent = total * total / n as f64;
        let mut left_sum = 0.0;
        let mut best: Option<BestSplit> = None;
        for i in 0..n - 1 {
            left_sum += sorted[i].1;
            let nl = i + 1;
            if nl < self.min_leaf || n - nl < self.min_leaf || sorted[i].0 == sorted[i + 1].0 {
                continue;
            }
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / nl as f64 + right_sum * right_sum / (n - nl) as f64 - parent;
            if gain > 1e-12 && best.as_ref().map_or(true, |b| gain > b.gain) {
                best = Some(BestSplit {
                    feature: k,
                    threshold: (sorted[i].0 + sorted[i + 1].0) / 2.0,
                    gain,
                });
            }
        }
        best
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(self.mean(&rows)));
        if depth >= self.max_depth || rows.len() < 2 * self.min_leaf.max(1) {
            return id;
        }
        let d = self.x.ncols();
        let mut features: Vec<usize> = (0..d).collect();
        features.shuffle(rng);
        // sampled features first; the rest only if none of them splits
        let mut best: Option<BestSplit> = None;
        for (pos, &k) in features.iter().enumerate() {
            if pos >= self.mtry && best.is_some() {
                break;
            }
            if let Some(s) = self.best_for_feature(&rows, k) {
                if best.as_ref().map_or(true, |b| s.gain > b.gain) {
                    best = Some(s);
                }
            }
        }
        let Some(split) = best else { return id };
        let (left, right): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&r| self.x[[r, split.feature]] <= split.threshold);
        let l = self.grow(left, depth + 1, rng);
        let r = self.grow(right, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: l,
            right: r,
        };
        id
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<RegressionTree>,
}

impl Regressor for RandomForest {
    fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Bagged variance-reduction trees considering `⌊√d⌋` random features per
/// split (more only when none of them yields a split).
pub fn rf_fit<'a>(x: ArrayView2<'a, f64>, y: &'a [f64], config: &ForestConfig) -> Result<RandomForest> {
    check_xy(x, y)?;
    if config.n_trees == 0 {
        return Err(Error::invalid("n_trees must be at least 1"));
    }
    let n = y.len();
    let mtry = ((x.ncols() as f64).sqrt().floor() as usize).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trees = Vec::with_capacity(config.n_trees);
    for _ in 0..config.n_trees {
        let rows: Vec<usize> = if config.bootstrap {
            (0..n).map(|_| rng.gen_range(0..n)).collect()
        } else {
            let mut r = sample(&mut rng, n, n).into_vec();
            r.sort_unstable();
            r
        };
        let mut b = Builder {
            x,
            y,
            max_depth: config.max_depth,
            min_leaf: config.min_leaf.max(1),
            mtry,
            nodes: Vec::new(),
        };
        b.grow(rows, 0, &mut rng);
        trees.push(RegressionTree { nodes: b.nodes });
    }
    Ok(RandomForest { trees })
}
