//! Conflict-weighted user engagement graph, temporal snapshots, enclosing
//! subgraphs and the dynamics analyses built on them.

mod analysis;
mod clusters;

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use analysis::{
    depth_conflict_profile, source_cluster_mapping, source_conflict_series, write_depth_csv,
    write_series_csv, ClusterSources, DepthBucket, SeriesRow, SourceSeries, SourceStats,
};
pub use clusters::{
    archetype_graph, classify_cluster, cluster_report, detect_clusters, write_clusters_csv,
    Archetype, ClusterInfo, ClusterReport, ClusterType, DEFAULT_MAJORITY, LPA_MAX_ITER, LPA_RESTARTS,
};

/// Default hop bound for enclosing subgraphs.
pub const DEFAULT_DIS_MAX: usize = 100;
/// Default node cap for enclosing subgraphs.
pub const DEFAULT_NODE_CAP: usize = 5000;
/// Degree used in place of zero for isolated nodes.
pub const DEGREE_EPSILON: f64 = 1e-12;
pub const DAY_SECONDS: i64 = 86_400;

/// One user-user interaction with its conflict factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredInteraction {
    pub user_a: String,
    pub user_b: String,
    pub time: i64,
    pub cf: f64,
}

/// Summary of one undirected edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRow {
    pub user_a: String,
    pub user_b: String,
    pub weight: f64,
    pub n_interactions: usize,
    pub first_time: i64,
    pub last_time: i64,
    pub label: String,
}

/// Undirected engagement graph. Nodes are sorted user ids; each edge keeps
/// its interactions in time order and weighs them by their mean conflict.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EngagementGraph {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    edges: BTreeMap<(usize, usize), Vec<(i64, f64)>>,
    adjacency: Vec<Vec<usize>>,
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Build the graph from scored interactions. Self-interactions are ignored.
pub fn build_graph<'a, I>(interactions: I) -> Result<EngagementGraph>
where
    I: IntoIterator<Item = &'a ScoredInteraction>,
{
    let mut by_pair: BTreeMap<(String, String), Vec<(i64, f64)>> = BTreeMap::new();
    for it in interactions {
        if !(it.cf >= 0.0) || !it.cf.is_finite() {
            return Err(Error::invalid(format!(
                "interaction {}-{} has conflict {}",
                it.user_a, it.user_b, it.cf
            )));
        }
        if it.user_a == it.user_b {
            continue;
        }
        let key = if it.user_a < it.user_b {
            (it.user_a.clone(), it.user_b.clone())
        } else {
            (it.user_b.clone(), it.user_a.clone())
        };
        by_pair.entry(key).or_default().push((it.time, it.cf));
    }
    Ok(EngagementGraph::from_pairs(by_pair))
}

impl EngagementGraph {
    fn from_pairs(by_pair: BTreeMap<(String, String), Vec<(i64, f64)>>) -> Self {
        let mut nodes: Vec<String> = by_pair
            .keys()
            .flat_map(|(a, b)| [a.clone(), b.clone()])
            .collect();
        nodes.sort();
        nodes.dedup();
        let index: HashMap<String, usize> =
            nodes.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut edges = BTreeMap::new();
        for ((a, b), mut list) in by_pair {
            list.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
            let (ia, ib) = (index[&a], index[&b]);
            adjacency[ia].push(ib);
            adjacency[ib].push(ia);
            edges.insert(ordered(ia, ib), list);
        }
        adjacency.iter_mut().for_each(|l| l.sort_unstable());
        EngagementGraph {
            nodes,
            index,
            edges,
            adjacency,
        }
    }

    /// Keep only interactions accepted by `keep`; edges and nodes left
    /// without interactions disappear.
    fn filter(&self, keep: impl Fn(i64) -> bool) -> Self {
        let mut by_pair = BTreeMap::new();
        for (&(a, b), list) in &self.edges {
            let kept: Vec<(i64, f64)> = list.iter().copied().filter(|(t, _)| keep(*t)).collect();
            if !kept.is_empty() {
                by_pair.insert((self.nodes[a].clone(), self.nodes[b].clone()), kept);
            }
        }
        EngagementGraph::from_pairs(by_pair)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_index(&self, user: &str) -> Option<usize> {
        self.index.get(user).copied()
    }

    pub fn contains(&self, user: &str) -> bool {
        self.index.contains_key(user)
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn interactions(&self, a: usize, b: usize) -> Option<&[(i64, f64)]> {
        self.edges.get(&ordered(a, b)).map(Vec::as_slice)
    }

    /// Mean conflict of the pair's interactions.
    pub fn weight_by_index(&self, a: usize, b: usize) -> Option<f64> {
        self.interactions(a, b)
            .map(|l| l.iter().map(|(_, cf)| cf).sum::<f64>() / l.len() as f64)
    }

    pub fn weight(&self, a: &str, b: &str) -> Option<f64> {
        self.weight_by_index(self.node_index(a)?, self.node_index(b)?)
    }

    /// Edges as `(a, b, weight)` with `a < b`, in index order.
    pub fn edge_weights(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(a, b), l)| {
            (a, b, l.iter().map(|(_, cf)| cf).sum::<f64>() / l.len() as f64)
        })
    }

    pub fn edge_rows(&self, tau: f64) -> Vec<EdgeRow> {
        self.edges
            .iter()
            .map(|(&(a, b), l)| {
                let weight = l.iter().map(|(_, cf)| cf).sum::<f64>() / l.len() as f64;
                EdgeRow {
                    user_a: self.nodes[a].clone(),
                    user_b: self.nodes[b].clone(),
                    weight,
                    n_interactions: l.len(),
                    first_time: l[0].0,
                    last_time: l[l.len() - 1].0,
                    label: if weight >= tau { "conflicting" } else { "non-conflicting" }.to_string(),
                }
            })
            .collect()
    }

    /// Interactions with `time <= t`.
    pub fn snapshot(&self, t: i64) -> Snapshot {
        Snapshot {
            t,
            graph: self.filter(|time| time <= t),
        }
    }

    /// Interactions with `time < t`, the view available to a prediction
    /// made at `t`.
    pub fn before(&self, t: i64) -> EngagementGraph {
        self.filter(|time| time < t)
    }

    /// Snapshots at `start + k * step` for `k < count`.
    pub fn snapshots(&self, start: i64, step: i64, count: usize) -> Result<Vec<Snapshot>> {
        if step <= 0 {
            return Err(Error::invalid(format!("snapshot step {step} must be positive")));
        }
        Ok((0..count as i64).map(|k| self.snapshot(start + k * step)).collect())
    }
}

/// The graph as of reference time `t` (right-closed).
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: i64,
    pub graph: EngagementGraph,
}

/// Write `user_a,user_b,weight,n_interactions,first_time,last_time,label`.
pub fn write_edges_csv<W: Write>(writer: W, graph: &EngagementGraph, tau: f64) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let rows = graph.edge_rows(tau);
    if rows.is_empty() {
        w.write_record([
            "user_a", "user_b", "weight", "n_interactions", "first_time", "last_time", "label",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(Error::Stream)?;
    Ok(())
}

/// Hop distances from `start`, unexplored beyond `max_depth`.
fn bfs(graph: &EngagementGraph, start: usize, max_depth: usize) -> HashMap<usize, usize> {
    let mut dist = HashMap::from([(start, 0)]);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        let d = dist[&u];
        if d == max_depth {
            continue;
        }
        for &v in graph.neighbors(u) {
            if !dist.contains_key(&v) {
                dist.insert(v, d + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Nodes within `dis_max` hops of both anchors with their induced weighted
/// adjacency. Anchors sit at positions 0 and 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EnclosingSubgraph {
    pub nodes: Vec<String>,
    pub adjacency: Array2<f64>,
    /// `(dis_i, dis_j)` per node.
    pub distances: Vec<(usize, usize)>,
}

impl EnclosingSubgraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

pub fn enclosing_subgraph(
    graph: &EngagementGraph,
    v_i: &str,
    v_j: &str,
    dis_max: usize,
    node_cap: usize,
) -> Result<EnclosingSubgraph> {
    let ai = graph
        .node_index(v_i)
        .ok_or_else(|| Error::UnknownNode(v_i.to_string()))?;
    let aj = graph
        .node_index(v_j)
        .ok_or_else(|| Error::UnknownNode(v_j.to_string()))?;
    if ai == aj {
        return Err(Error::invalid("enclosing subgraph anchors must differ"));
    }
    if dis_max == 0 {
        return Err(Error::invalid("dis_max must be at least 1"));
    }
    if node_cap < 2 {
        return Err(Error::invalid("node_cap must be at least 2"));
    }
    let di = bfs(graph, ai, dis_max);
    let dj = bfs(graph, aj, dis_max);
    let mut others: Vec<(usize, usize, usize, usize)> = di
        .iter()
        .filter(|(n, _)| **n != ai && **n != aj)
        .filter_map(|(&n, &a)| dj.get(&n).map(|&b| (a + b, n, a, b)))
        .collect();
    // node ids are sorted names, so index order is id order
    others.sort_unstable();
    others.truncate(node_cap - 2);
    let far = usize::MAX;
    let mut members = vec![
        (ai, 0, dj.get(&ai).copied().unwrap_or(far)),
        (aj, di.get(&aj).copied().unwrap_or(far), 0),
    ];
    members.extend(others.into_iter().map(|(_, n, a, b)| (n, a, b)));
    let n = members.len();
    let mut adjacency = Array2::zeros((n, n));
    for x in 0..n {
        for y in (x + 1)..n {
            if let Some(w) = graph.weight_by_index(members[x].0, members[y].0) {
                adjacency[[x, y]] = w;
                adjacency[[y, x]] = w;
            }
        }
    }
    Ok(EnclosingSubgraph {
        nodes: members.iter().map(|m| graph.nodes[m.0].clone()).collect(),
        adjacency,
        distances: members.iter().map(|m| (m.1, m.2)).collect(),
    })
}

/// `D^-1/2 A D^-1/2` with weighted degrees; zero-degree nodes use
/// [`DEGREE_EPSILON`] and keep zero rows.
pub fn normalized_adjacency(a: &Array2<f64>) -> Result<Array2<f64>> {
    let (n, m) = a.dim();
    if n != m {
        return Err(Error::DimensionMismatch {
            context: "adjacency",
            detail: format!("{n}x{m} is not square"),
        });
    }
    if a.iter().any(|w| *w < 0.0 || !w.is_finite()) {
        return Err(Error::invalid("adjacency weights must be finite and non-negative"));
    }
    let degree: Vec<f64> = a
        .rows()
        .into_iter()
        .map(|r| {
            let d = r.sum();
            if d > 0.0 {
                d
            } else {
                DEGREE_EPSILON
            }
        })
        .collect();
    Ok(Array2::from_shape_fn((n, n), |(i, j)| {
        a[[i, j]] / (degree[i] * degree[j]).sqrt()
    }))
}
