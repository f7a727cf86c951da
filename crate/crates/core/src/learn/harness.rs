use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gcn::GcnSample;
use crate::error::{Error, Result};
use crate::features::{History, HistoryView, UserNodeFeatures};
use crate::graph::{
    build_graph, enclosing_subgraph, normalized_adjacency, EnclosingSubgraph, EngagementGraph,
    ScoredInteraction, DAY_SECONDS,
};

/// 1 when the pair has an interaction with `cf ≥ tau` in
/// `(as_of, as_of + horizon]`.
pub fn label_pair(
    user_i: &str,
    user_j: &str,
    events: &[ScoredInteraction],
    as_of: i64,
    horizon: i64,
    tau: f64,
) -> u8 {
    let hit = events.iter().any(|e| {
        let same = (e.user_a == user_i && e.user_b == user_j) || (e.user_a == user_j && e.user_b == user_i);
        same && e.time > as_of && e.time <= as_of + horizon && e.cf >= tau
    });
    u8::from(hit)
}

/// A labelled user pair at one prediction instant, before features are
/// attached. `user_i < user_j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairCandidate {
    pub user_i: String,
    pub user_j: String,
    pub as_of: i64,
    pub label: u8,
    /// Whether the two users interacted before `as_of`.
    pub met_before: bool,
}

/// Where negative pairs come from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NegativeSampling {
    /// Pairs that interact inside the horizon without any conflict.
    #[default]
    Engaged,
    /// Uniformly drawn pairs of known users without a conflict ahead.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingConfig {
    pub horizon: i64,
    pub tau: f64,
    pub negatives: NegativeSampling,
    /// Cap on pairs drawn per prediction instant; `None` keeps all.
    pub pairs_per_snapshot: Option<usize>,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            horizon: DAY_SECONDS,
            tau: 1.0,
            negatives: NegativeSampling::Engaged,
            pairs_per_snapshot: None,
            seed: 0,
        }
    }
}

fn ordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// Balanced labelled pairs for one instant: every pair with a conflict in
/// the horizon is a positive, negatives follow `config.negatives`, and the
/// larger class is subsampled to the size of the smaller.
pub fn sample_pairs(events: &[ScoredInteraction], as_of: i64, config: &SamplingConfig) -> Vec<PairCandidate> {
    let end = as_of + config.horizon;
    let mut ahead: BTreeMap<(String, String), bool> = BTreeMap::new();
    let mut met: BTreeSet<(String, String)> = BTreeSet::new();
    let mut known: BTreeSet<&str> = BTreeSet::new();
    for e in events.iter().filter(|e| e.user_a != e.user_b) {
        let key = ordered(&e.user_a, &e.user_b);
        if e.time < as_of {
            met.insert(key.clone());
        }
        if e.time <= end {
            known.insert(&e.user_a);
            known.insert(&e.user_b);
        }
        if e.time > as_of && e.time <= end {
            *ahead.entry(key).or_insert(false) |= e.cf >= config.tau;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ (as_of as u64));
    let positives: Vec<(String, String)> = ahead.iter().filter(|(_, c)| **c).map(|(k, _)| k.clone()).collect();
    let mut negatives: Vec<(String, String)> = match config.negatives {
        NegativeSampling::Engaged => ahead.iter().filter(|(_, c)| !**c).map(|(k, _)| k.clone()).collect(),
        NegativeSampling::Random => {
            let users: Vec<&str> = known.into_iter().collect();
            let mut drawn = BTreeSet::new();
            if users.len() >= 2 {
                let mut attempts = 0;
                while drawn.len() < positives.len() && attempts < 20 * positives.len().max(1) {
                    attempts += 1;
                    let a = users[rng.gen_range(0..users.len())];
                    let b = users[rng.gen_range(0..users.len())];
                    let key = ordered(a, b);
                    if a != b && !ahead.get(&key).copied().unwrap_or(false) {
                        drawn.insert(key);
                    }
                }
            }
            drawn.into_iter().collect()
        }
    };
    let mut positives = positives;
    let mut per_class = positives.len().min(negatives.len());
    if let Some(cap) = config.pairs_per_snapshot {
        per_class = per_class.min(cap / 2);
    }
    positives.shuffle(&mut rng);
    negatives.shuffle(&mut rng);
    let mut out: Vec<PairCandidate> = positives
        .into_iter()
        .take(per_class)
        .map(|k| (k, 1))
        .chain(negatives.into_iter().take(per_class).map(|k| (k, 0)))
        .map(|((user_i, user_j), label)| {
            let met_before = met.contains(&(user_i.clone(), user_j.clone()));
            PairCandidate {
                user_i,
                user_j,
                as_of,
                label,
                met_before,
            }
        })
        .collect();
    out.sort();
    out
}

/// Subsample the larger class so both labels occur equally often.
pub fn balanced(candidates: &[PairCandidate], seed: u64) -> Vec<PairCandidate> {
    let (mut pos, mut neg): (Vec<&PairCandidate>, Vec<&PairCandidate>) =
        candidates.iter().partition(|c| c.label == 1);
    let n = pos.len().min(neg.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut out: Vec<PairCandidate> = pos.into_iter().take(n).chain(neg.into_iter().take(n)).cloned().collect();
    out.sort_by(|a, b| a.as_of.cmp(&b.as_of).then_with(|| a.cmp(b)));
    out
}

/// Index sets of a train / development / test partition.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSplit {
    pub train: Vec<usize>,
    pub dev: Vec<usize>,
    pub test: Vec<usize>,
}

/// Order items by time (ties by position), hold out the last `test_frac`
/// as test and the last `dev_frac` of the remainder as development.
pub fn time_ordered_split(times: &[i64], test_frac: f64, dev_frac: f64) -> Result<TimeSplit> {
    if !(0.0..1.0).contains(&test_frac) || !(0.0..1.0).contains(&dev_frac) {
        return Err(Error::invalid("split fractions must lie in [0, 1)"));
    }
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by_key(|&k| (times[k], k));
    let n_test = (times.len() as f64 * test_frac).round() as usize;
    let n_fit = times.len() - n_test;
    let n_dev = (n_fit as f64 * dev_frac).round() as usize;
    Ok(TimeSplit {
        train: order[..n_fit - n_dev].to_vec(),
        dev: order[n_fit - n_dev..n_fit].to_vec(),
        test: order[n_fit..].to_vec(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per-stratum shuffled split keeping each stratum's test share close to
/// `test_frac`. Every stratum needs at least `min_per_stratum` items (and
/// at least two); otherwise the error names the offending strata.
pub fn stratified_split(strata: &[String], test_frac: f64, min_per_stratum: usize, seed: u64) -> Result<Split> {
    if !(test_frac > 0.0 && test_frac < 1.0) {
        return Err(Error::invalid("test fraction must lie in (0, 1)"));
    }
    if strata.is_empty() {
        return Err(Error::EmptyInput("stratified samples"));
    }
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (k, s) in strata.iter().enumerate() {
        groups.entry(s).or_default().push(k);
    }
    let need = min_per_stratum.max(2);
    let small: Vec<String> = groups
        .iter()
        .filter(|(_, v)| v.len() < need)
        .map(|(s, v)| format!("{s} ({})", v.len()))
        .collect();
    if !small.is_empty() {
        return Err(Error::invalid(format!(
            "too few samples (need {need}) for sources: {}",
            small.join(", ")
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = Split::default();
    for (_, mut idx) in groups {
        idx.shuffle(&mut rng);
        let n_test = ((idx.len() as f64 * test_frac).round() as usize).clamp(1, idx.len() - 1);
        split.test.extend_from_slice(&idx[..n_test]);
        split.train.extend_from_slice(&idx[n_test..]);
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

/// Graph neighbourhood and node features of one labelled pair. Anchors sit
/// at positions 0 and 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSample {
    pub subgraph: EnclosingSubgraph,
    pub node_features: Vec<UserNodeFeatures>,
    pub label: u8,
    pub as_of: i64,
}

impl PairSample {
    pub fn to_gcn_sample(&self) -> Result<GcnSample> {
        let rows: Vec<Vec<f64>> = self.node_features.iter().map(UserNodeFeatures::to_vec).collect();
        Ok(GcnSample {
            a_hat: normalized_adjacency(&self.subgraph.adjacency)?,
            x: super::rows_to_array(&rows)?,
            i: 0,
            j: 1,
            label: self.label,
        })
    }
}

fn graph_before(history: &History, as_of: i64) -> Result<EngagementGraph> {
    let scored: Vec<ScoredInteraction> = history
        .interactions
        .iter()
        .filter(|e| e.time < as_of)
        .map(|e| ScoredInteraction {
            user_a: e.user_a.clone(),
            user_b: e.user_b.clone(),
            time: e.time,
            cf: e.cf,
        })
        .collect();
    build_graph(&scored)
}

fn assemble(
    view: &HistoryView<'_>,
    graph: &EngagementGraph,
    cand: &PairCandidate,
    dis_max: usize,
    node_cap: usize,
    feature_dim: usize,
) -> Result<PairSample> {
    let subgraph = if graph.contains(&cand.user_i) && graph.contains(&cand.user_j) {
        enclosing_subgraph(graph, &cand.user_i, &cand.user_j, dis_max, node_cap)?
    } else {
        // a newcomer has no neighbourhood yet
        EnclosingSubgraph {
            nodes: vec![cand.user_i.clone(), cand.user_j.clone()],
            adjacency: Array2::zeros((2, 2)),
            distances: vec![(0, usize::MAX), (usize::MAX, 0)],
        }
    };
    let node_features = subgraph
        .nodes
        .iter()
        .map(|u| view.node_features(u, feature_dim))
        .collect::<Result<Vec<_>>>()?;
    Ok(PairSample {
        subgraph,
        node_features,
        label: cand.label,
        as_of: cand.as_of,
    })
}

/// Build one pair sample from the events before its `as_of`.
pub fn pair_sample(
    history: &History,
    cand: &PairCandidate,
    dis_max: usize,
    node_cap: usize,
    feature_dim: usize,
) -> Result<PairSample> {
    let graph = graph_before(history, cand.as_of)?;
    assemble(&history.view(cand.as_of), &graph, cand, dis_max, node_cap, feature_dim)
}

/// Same as [`pair_sample`] for many candidates, sharing the graph and
/// aggregates of each prediction instant.
pub fn pair_samples(
    history: &History,
    cands: &[PairCandidate],
    dis_max: usize,
    node_cap: usize,
    feature_dim: usize,
) -> Result<Vec<PairSample>> {
    let mut cache: BTreeMap<i64, (EngagementGraph, HistoryView<'_>)> = BTreeMap::new();
    cands
        .iter()
        .map(|c| {
            if !cache.contains_key(&c.as_of) {
                cache.insert(c.as_of, (graph_before(history, c.as_of)?, history.view(c.as_of)));
            }
            let (graph, view) = &cache[&c.as_of];
            assemble(view, graph, c, dis_max, node_cap, feature_dim)
        })
        .collect()
}

/// One line of a training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub step: usize,
    pub split: String,
    pub loss: f64,
    pub auc: Option<f64>,
}

/// CSV with header `step,split,loss,auc`; an undefined AUC is left empty.
pub fn write_training_log<W: Write>(writer: W, rows: &[LogRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["step", "split", "loss", "auc"])?;
    for r in rows {
        w.write_record([
            r.step.to_string(),
            r.split.clone(),
            format!("{:.6}", r.loss),
            r.auc.map(|a| format!("{a:.6}")).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(Error::Stream)?;
    Ok(())
}
