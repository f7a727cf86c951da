use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::conflict::NormalizedConflict;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthBucket {
    pub depth: usize,
    pub mean: f64,
    /// Population variance.
    pub variance: f64,
    pub count: usize,
}

/// Aggregate per-term conflict of parent-child pairs by the parent's
/// depth. Pairs with no common term are skipped.
pub fn depth_conflict_profile<I>(pairs: I) -> Vec<DepthBucket>
where
    I: IntoIterator<Item = (usize, NormalizedConflict)>,
{
    let mut by_depth: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (depth, c) in pairs {
        if c.defined {
            by_depth.entry(depth).or_default().push(c.value);
        }
    }
    by_depth
        .into_iter()
        .map(|(depth, xs)| {
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let variance = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            DepthBucket {
                depth,
                mean,
                variance,
                count: xs.len(),
            }
        })
        .collect()
}

pub fn write_depth_csv<W: Write>(writer: W, buckets: &[DepthBucket]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if buckets.is_empty() {
        w.write_record(["depth", "mean", "variance", "count"])?;
    }
    for b in buckets {
        w.serialize(b)?;
    }
    w.flush().map_err(Error::Stream)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub source: String,
    pub window_start: i64,
    /// Mean score in the window; `None` for a window without articles.
    pub value: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceStats {
    pub source: String,
    pub max: f64,
    pub min: f64,
    pub mean: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSeries {
    pub rows: Vec<SeriesRow>,
    pub stats: Vec<SourceStats>,
}

/// Windowed mean score per source on a shared grid starting at the
/// earliest article, plus each source's max, min and mean. Every source
/// gets a row for every window; empty windows carry no value.
pub fn source_conflict_series(
    articles: &[(String, i64, f64)],
    window: i64,
) -> Result<SourceSeries> {
    if window <= 0 {
        return Err(Error::invalid(format!("window {window} must be positive")));
    }
    let Some(start) = articles.iter().map(|a| a.1).min() else {
        return Ok(SourceSeries {
            rows: Vec::new(),
            stats: Vec::new(),
        });
    };
    let end = articles.iter().map(|a| a.1).max().unwrap_or(start);
    let windows = ((end - start) / window + 1) as usize;
    let mut by_source: BTreeMap<&str, Vec<Vec<f64>>> = BTreeMap::new();
    for (source, t, nc) in articles {
        if !nc.is_finite() {
            return Err(Error::NonFinite("news conflict score"));
        }
        let k = ((t - start) / window) as usize;
        by_source.entry(source).or_insert_with(|| vec![Vec::new(); windows])[k].push(*nc);
    }
    let mut rows = Vec::new();
    let mut stats = Vec::new();
    for (source, buckets) in by_source {
        for (k, b) in buckets.iter().enumerate() {
            rows.push(SeriesRow {
                source: source.to_string(),
                window_start: start + k as i64 * window,
                value: (!b.is_empty()).then(|| b.iter().sum::<f64>() / b.len() as f64),
                n: b.len(),
            });
        }
        let all: Vec<f64> = buckets.into_iter().flatten().collect();
        stats.push(SourceStats {
            source: source.to_string(),
            max: all.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min: all.iter().copied().fold(f64::INFINITY, f64::min),
            mean: all.iter().sum::<f64>() / all.len() as f64,
            n: all.len(),
        });
    }
    Ok(SourceSeries { rows, stats })
}

/// Write `source,window_start,value,n`; empty windows leave `value` blank.
pub fn write_series_csv<W: Write>(writer: W, series: &SourceSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if series.rows.is_empty() {
        w.write_record(["source", "window_start", "value", "n"])?;
    }
    for r in &series.rows {
        w.serialize(r)?;
    }
    w.flush().map_err(Error::Stream)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSources {
    pub cluster_id: usize,
    pub size: usize,
    /// `(source, percentage)`, largest share first.
    pub shares: Vec<(String, f64)>,
}

/// Share of recent discussion participations per source for the `top`
/// largest clusters. `participation` lists `(user, discussion, source)`;
/// members without a recent discussion add nothing to the denominator.
pub fn source_cluster_mapping(
    clusters: &[Vec<String>],
    participation: &[(String, String, String)],
    top: usize,
) -> Vec<ClusterSources> {
    let mut by_user: HashMap<&str, HashSet<(&str, &str)>> = HashMap::new();
    for (u, d, s) in participation {
        by_user.entry(u).or_default().insert((d, s));
    }
    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.sort_by(|&a, &b| clusters[b].len().cmp(&clusters[a].len()).then(a.cmp(&b)));
    order
        .into_iter()
        .take(top)
        .map(|c| {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for m in &clusters[c] {
                for (_, s) in by_user.get(m.as_str()).into_iter().flatten() {
                    *counts.entry(s).or_default() += 1;
                }
            }
            let total: usize = counts.values().sum();
            let mut shares: Vec<(String, f64)> = counts
                .into_iter()
                .map(|(s, n)| (s.to_string(), 100.0 * n as f64 / total as f64))
                .collect();
            shares.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            ClusterSources {
                cluster_id: c,
                size: clusters[c].len(),
                shares,
            }
        })
        .collect()
}
