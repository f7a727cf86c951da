use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{build_graph, EngagementGraph, ScoredInteraction, Snapshot};
use crate::error::{Error, Result};

pub const LPA_MAX_ITER: usize = 100;
pub const DEFAULT_MAJORITY: f64 = 0.7;
const PEACEFUL_AFFINITY: f64 = 1.0;
const CONFLICT_AFFINITY: f64 = 0.1;

/// Label-propagation restarts per detection.
pub const LPA_RESTARTS: u64 = 10;

fn affinity(graph: &EngagementGraph, a: usize, b: usize, tau: f64) -> f64 {
    match graph.weight_by_index(a, b) {
        Some(w) if w >= tau => CONFLICT_AFFINITY,
        _ => PEACEFUL_AFFINITY,
    }
}

/// Partition nodes by seeded asynchronous label propagation.
///
/// Edges weigh 1 when non-conflicting (`w < tau`) and 0.1 otherwise. Each
/// node takes the label of greatest neighbour affinity; a tie keeps the
/// current label if it is among the best, else a seeded random pick. The
/// run is restarted [`LPA_RESTARTS`] times and the partition of highest
/// affinity-weighted modularity is kept. Clusters are numbered by their
/// smallest member. Returns the cluster id of each node.
pub fn detect_clusters(graph: &EngagementGraph, tau: f64, seed: u64) -> Vec<usize> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for r in 0..LPA_RESTARTS {
        let labels = propagate(graph, tau, seed.wrapping_mul(LPA_RESTARTS).wrapping_add(r));
        let q = modularity(graph, &labels, tau);
        if best.as_ref().map_or(true, |(bq, _)| q > *bq + 1e-12) {
            best = Some((q, labels));
        }
    }
    best.map(|(_, l)| l).unwrap_or_default()
}

/// Newman modularity of a partition under the affinity weights.
fn modularity(graph: &EngagementGraph, labels: &[usize], tau: f64) -> f64 {
    let n = graph.node_count();
    let mut strength = vec![0.0; n];
    let mut total = 0.0;
    let mut inside = 0.0;
    for (a, b, _) in graph.edge_weights() {
        let w = affinity(graph, a, b, tau);
        strength[a] += w;
        strength[b] += w;
        total += w;
        if labels[a] == labels[b] {
            inside += w;
        }
    }
    if total == 0.0 {
        return 0.0;
    }
    let mut per_label: BTreeMap<usize, f64> = BTreeMap::new();
    for (i, s) in strength.iter().enumerate() {
        *per_label.entry(labels[i]).or_default() += s;
    }
    inside / total - per_label.values().map(|s| (s / (2.0 * total)).powi(2)).sum::<f64>()
}

fn propagate(graph: &EngagementGraph, tau: f64, seed: u64) -> Vec<usize> {
    let n = graph.node_count();
    let mut labels: Vec<usize> = (0..n).collect();
    let affinity = |a: usize, b: usize| affinity(graph, a, b, tau);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..LPA_MAX_ITER {
        order.shuffle(&mut rng);
        let mut changed = false;
        for &u in &order {
            let mut score: BTreeMap<usize, f64> = BTreeMap::new();
            for &v in graph.neighbors(u) {
                *score.entry(labels[v]).or_default() += affinity(u, v);
            }
            let Some(best) = score.values().copied().reduce(f64::max) else { continue };
            let is_best = |l: usize| score.get(&l).is_some_and(|s| (s - best).abs() < 1e-12);
            let next = if is_best(labels[u]) {
                labels[u]
            } else {
                let tied: Vec<usize> = score.keys().copied().filter(|&l| is_best(l)).collect();
                *tied.choose(&mut rng).expect("non-empty")
            };
            if next != labels[u] {
                labels[u] = next;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut renumber: BTreeMap<usize, usize> = BTreeMap::new();
    let mut out = Vec::with_capacity(n);
    for &l in &labels {
        let next = renumber.len();
        out.push(*renumber.entry(l).or_insert(next));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClusterType {
    /// Internally non-conflicting, not aggressive outward.
    I,
    /// Internally conflicting.
    II,
    /// Internally non-conflicting, conflicting toward other clusters.
    III,
    Untyped,
}

impl ClusterType {
    pub fn label(self) -> &'static str {
        match self {
            ClusterType::I => "I",
            ClusterType::II => "II",
            ClusterType::III => "III",
            ClusterType::Untyped => "untyped",
        }
    }
}

/// Conflicting fractions of internal and outgoing edges of `members`
/// (given as a membership mask), and the resulting type.
pub fn classify_cluster(
    graph: &EngagementGraph,
    in_cluster: &[bool],
    tau: f64,
    majority: f64,
) -> (f64, f64, ClusterType) {
    let (mut inside, mut inside_conf, mut outside, mut outside_conf) = (0usize, 0usize, 0usize, 0usize);
    for (a, b, w) in graph.edge_weights() {
        let conf = usize::from(w >= tau);
        match (in_cluster[a], in_cluster[b]) {
            (true, true) => {
                inside += 1;
                inside_conf += conf;
            }
            (true, false) | (false, true) => {
                outside += 1;
                outside_conf += conf;
            }
            _ => {}
        }
    }
    let frac = |c: usize, t: usize| if t == 0 { 0.0 } else { c as f64 / t as f64 };
    let (f_in, f_out) = (frac(inside_conf, inside), frac(outside_conf, outside));
    let low = 1.0 - majority;
    let kind = if inside + outside == 0 {
        ClusterType::Untyped
    } else if f_in >= majority {
        ClusterType::II
    } else if f_in < low && f_out >= majority {
        ClusterType::III
    } else if f_in < low && f_out < low {
        ClusterType::I
    } else {
        ClusterType::Untyped
    };
    (f_in, f_out, kind)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterInfo {
    pub id: usize,
    pub members: Vec<String>,
    pub f_in: f64,
    pub f_out: f64,
    pub kind: ClusterType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub snapshot_t: i64,
    pub clusters: Vec<ClusterInfo>,
}

/// Detect and type the clusters of a snapshot.
pub fn cluster_report(snapshot: &Snapshot, tau: f64, majority: f64, seed: u64) -> ClusterReport {
    let g = &snapshot.graph;
    let labels = detect_clusters(g, tau, seed);
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let clusters = (0..k)
        .map(|c| {
            let mask: Vec<bool> = labels.iter().map(|&l| l == c).collect();
            let (f_in, f_out, kind) = classify_cluster(g, &mask, tau, majority);
            ClusterInfo {
                id: c,
                members: (0..g.node_count())
                    .filter(|&i| mask[i])
                    .map(|i| g.nodes()[i].clone())
                    .collect(),
                f_in,
                f_out,
                kind,
            }
        })
        .collect();
    ClusterReport {
        snapshot_t: snapshot.t,
        clusters,
    }
}

/// Write `snapshot_t,cluster_id,user,type`.
pub fn write_clusters_csv<W: Write>(writer: W, reports: &[ClusterReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["snapshot_t", "cluster_id", "user", "type"])?;
    for r in reports {
        for c in &r.clusters {
            for m in &c.members {
                w.write_record([
                    r.snapshot_t.to_string(),
                    c.id.to_string(),
                    m.clone(),
                    c.kind.label().to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(Error::Stream)?;
    Ok(())
}

/// The three reference engagement patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Archetype {
    /// Two peaceful cliques joined by one peaceful edge.
    Peaceful,
    /// Two internally conflicting cliques joined by one conflicting edge.
    Feuding,
    /// Two peaceful cliques with every cross pair conflicting.
    Factional,
}

/// Two five-user cliques wired per `kind`. Conflicting edges carry cf 2,
/// peaceful ones 0, so any `tau` in `(0, 2]` separates them.
pub fn archetype_graph(kind: Archetype) -> EngagementGraph {
    let left: Vec<String> = (0..5).map(|i| format!("a{i}")).collect();
    let right: Vec<String> = (0..5).map(|i| format!("b{i}")).collect();
    let intra = if kind == Archetype::Feuding { 2.0 } else { 0.0 };
    let mut edges = Vec::new();
    for side in [&left, &right] {
        for x in 0..side.len() {
            for y in (x + 1)..side.len() {
                edges.push((side[x].clone(), side[y].clone(), intra));
            }
        }
    }
    match kind {
        Archetype::Peaceful => edges.push((left[0].clone(), right[0].clone(), 0.0)),
        Archetype::Feuding => edges.push((left[0].clone(), right[0].clone(), 2.0)),
        Archetype::Factional => {
            for a in &left {
                for b in &right {
                    edges.push((a.clone(), b.clone(), 2.0));
                }
            }
        }
    }
    let interactions: Vec<ScoredInteraction> = edges
        .into_iter()
        .map(|(a, b, cf)| ScoredInteraction {
            user_a: a,
            user_b: b,
            time: 0,
            cf,
        })
        .collect();
    build_graph(&interactions).expect("archetype weights are valid")
}
