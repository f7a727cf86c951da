use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sentiment::TdSentimentVector;

/// Mean of the nonzero `k`-th entries of a user's comment vectors; 0 when
/// the term never occurs.
pub fn user_target_sentiment(vectors: &[TdSentimentVector], k: usize) -> f64 {
    let entries: Vec<f64> = vectors
        .iter()
        .map(|v| v.get(k))
        .filter(|&x| x != 0)
        .map(f64::from)
        .collect();
    if entries.is_empty() {
        0.0
    } else {
        entries.iter().sum::<f64>() / entries.len() as f64
    }
}

/// The `k` most frequent sources, ties broken by name.
pub fn top_sources<'a, I>(sources: I, k: usize) -> Vec<String>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for s in sources {
        *counts.entry(s).or_default() += 1;
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked.into_iter().take(k).map(|(s, _)| s.to_string()).collect()
}

/// Node features of one user: averaged comment features followed by
/// source flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserNodeFeatures {
    pub mean: Vec<f64>,
    pub source_flags: Vec<u8>,
}

impl UserNodeFeatures {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.mean.clone();
        v.extend(self.source_flags.iter().map(|&f| f64::from(f)));
        v
    }
}

pub fn user_node_features(
    comment_vectors: &[&[f64]],
    engaged_sources: &BTreeSet<String>,
    top: &[String],
) -> Result<UserNodeFeatures> {
    let first = comment_vectors.first().ok_or(Error::EmptyInput("user comment features"))?;
    let mut mean = vec![0.0; first.len()];
    for v in comment_vectors {
        if v.len() != mean.len() {
            return Err(Error::LengthMismatch {
                expected: mean.len(),
                actual: v.len(),
            });
        }
        for (m, x) in mean.iter_mut().zip(*v) {
            *m += x;
        }
    }
    let n = comment_vectors.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(UserNodeFeatures {
        mean,
        source_flags: top.iter().map(|s| u8::from(engaged_sources.contains(s))).collect(),
    })
}

/// A past comment as seen by the pair-feature extractor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryComment {
    pub id: String,
    pub user: String,
    pub time: i64,
    pub thread: String,
    pub source: String,
    /// Lowercased tokens with stopwords removed.
    pub tokens: Vec<String>,
    /// Sparse TD-sentiment vector.
    pub td: Vec<(usize, u8)>,
    /// Flat comment feature vector (article layout).
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryInteraction {
    pub user_a: String,
    pub user_b: String,
    pub time: i64,
    pub cf: f64,
}

/// Time-stamped comments and interactions from which features are drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    pub comments: Vec<HistoryComment>,
    pub interactions: Vec<HistoryInteraction>,
    pub term_count: usize,
    /// Sources with a flag / CN slot, in slot order.
    pub sources: Vec<String>,
    pub tau: f64,
    users: BTreeSet<String>,
}

impl History {
    pub fn new(
        comments: Vec<HistoryComment>,
        interactions: Vec<HistoryInteraction>,
        term_count: usize,
        sources: Vec<String>,
        tau: f64,
    ) -> Self {
        let mut users: BTreeSet<String> = comments.iter().map(|c| c.user.clone()).collect();
        for i in &interactions {
            users.insert(i.user_a.clone());
            users.insert(i.user_b.clone());
        }
        History {
            comments,
            interactions,
            term_count,
            sources,
            tau,
            users,
        }
    }

    pub fn users(&self) -> &BTreeSet<String> {
        &self.users
    }

    pub fn contains_user(&self, user: &str) -> bool {
        self.users.contains(user)
    }

    /// Copy without any event at or after `t`. The user roster is kept so
    /// that lookups behave the same.
    pub fn truncated(&self, t: i64) -> History {
        History {
            comments: self.comments.iter().filter(|c| c.time < t).cloned().collect(),
            interactions: self.interactions.iter().filter(|i| i.time < t).cloned().collect(),
            term_count: self.term_count,
            sources: self.sources.clone(),
            tau: self.tau,
            users: self.users.clone(),
        }
    }

    /// Aggregates over the events strictly before `as_of`.
    pub fn view(&self, as_of: i64) -> HistoryView<'_> {
        HistoryView::new(self, as_of)
    }
}

fn canonical<'a>(a: &'a str, b: &'a str) -> (&'a str, &'a str) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn grams(tokens: &[String]) -> Vec<String> {
    let mut g = tokens.to_vec();
    g.extend(tokens.windows(2).map(|w| format!("{} {}", w[0], w[1])));
    g
}

#[derive(Debug, Default)]
struct UserAgg {
    grams: HashMap<String, usize>,
    ts: BTreeMap<usize, (f64, usize)>,
    threads: BTreeSet<String>,
    sources: BTreeSet<String>,
    feature_sum: Vec<f64>,
    comments: usize,
    conflicting: usize,
    peaceful: usize,
}

/// Per-user and per-pair aggregates of a [`History`] cut at `as_of`.
#[derive(Debug)]
pub struct HistoryView<'a> {
    history: &'a History,
    pub as_of: i64,
    users: HashMap<&'a str, UserAgg>,
    gram_df: HashMap<String, usize>,
    doc_count: usize,
    thread_source: HashMap<&'a str, &'a str>,
    pairs: HashMap<(&'a str, &'a str), Vec<f64>>,
}

impl<'a> HistoryView<'a> {
    fn new(history: &'a History, as_of: i64) -> Self {
        let mut users: HashMap<&str, UserAgg> = HashMap::new();
        let mut gram_df: HashMap<String, usize> = HashMap::new();
        let mut thread_source = HashMap::new();
        let mut doc_count = 0;
        for c in history.comments.iter().filter(|c| c.time < as_of) {
            doc_count += 1;
            thread_source.insert(c.thread.as_str(), c.source.as_str());
            let agg = users.entry(c.user.as_str()).or_default();
            let g = grams(&c.tokens);
            for gram in g.iter().collect::<HashSet<_>>() {
                *gram_df.entry(gram.clone()).or_default() += 1;
            }
            for gram in g {
                *agg.grams.entry(gram).or_default() += 1;
            }
            for &(k, label) in &c.td {
                let e = agg.ts.entry(k).or_default();
                e.0 += f64::from(label);
                e.1 += 1;
            }
            agg.threads.insert(c.thread.clone());
            agg.sources.insert(c.source.clone());
            if agg.feature_sum.is_empty() {
                agg.feature_sum = vec![0.0; c.features.len()];
            }
            for (s, x) in agg.feature_sum.iter_mut().zip(&c.features) {
                *s += x;
            }
            agg.comments += 1;
        }
        let mut pairs: HashMap<(&str, &str), Vec<f64>> = HashMap::new();
        for i in history.interactions.iter().filter(|i| i.time < as_of) {
            pairs
                .entry(canonical(&i.user_a, &i.user_b))
                .or_default()
                .push(i.cf);
            for u in [&i.user_a, &i.user_b] {
                let agg = users.entry(u.as_str()).or_default();
                if i.cf >= history.tau {
                    agg.conflicting += 1;
                } else {
                    agg.peaceful += 1;
                }
            }
        }
        HistoryView {
            history,
            as_of,
            users,
            gram_df,
            doc_count,
            thread_source,
            pairs,
        }
    }

    fn check(&self, user: &str) -> Result<()> {
        if self.history.contains_user(user) {
            Ok(())
        } else {
            Err(Error::UnknownUser(user.to_string()))
        }
    }

    fn agg(&self, user: &str) -> Option<&UserAgg> {
        self.users.get(user)
    }

    /// Averaged target sentiment over the user's past comments, one entry
    /// per term.
    pub fn target_sentiment(&self, user: &str) -> Result<Vec<f64>> {
        self.check(user)?;
        let mut ts = vec![0.0; self.history.term_count];
        if let Some(agg) = self.agg(user) {
            for (&k, &(sum, n)) in &agg.ts {
                ts[k] = sum / n as f64;
            }
        }
        Ok(ts)
    }

    /// Node features for the GCN. A user without past comments gets a
    /// zero mean block.
    pub fn node_features(&self, user: &str, feature_dim: usize) -> Result<UserNodeFeatures> {
        self.check(user)?;
        let top = &self.history.sources;
        match self.agg(user).filter(|a| a.comments > 0) {
            Some(agg) => {
                if agg.feature_sum.len() != feature_dim {
                    return Err(Error::LengthMismatch {
                        expected: feature_dim,
                        actual: agg.feature_sum.len(),
                    });
                }
                user_node_features(&[agg.feature_sum.as_slice()], &agg.sources, top).map(|mut f| {
                    f.mean.iter_mut().for_each(|m| *m /= agg.comments as f64);
                    f
                })
            }
            None => Ok(UserNodeFeatures {
                mean: vec![0.0; feature_dim],
                source_flags: vec![0; top.len()],
            }),
        }
    }

    fn common_token_weight(&self, a: &UserAgg, b: &UserAgg) -> f64 {
        let n = self.doc_count as f64;
        let mut shared: Vec<(&String, usize)> = a
            .grams
            .iter()
            .filter_map(|(g, &ta)| b.grams.get(g).map(|&tb| (g, ta + tb)))
            .collect();
        // fixed summation order keeps the result bit-stable
        shared.sort();
        shared
            .into_iter()
            .map(|(g, tf)| tf as f64 * (n / self.gram_df[g] as f64).ln())
            .sum()
    }

    pub fn pair_features(&self, i: &str, j: &str) -> Result<PairFeatures> {
        self.check(i)?;
        self.check(j)?;
        let empty = UserAgg::default();
        let a = self.agg(i).unwrap_or(&empty);
        let b = self.agg(j).unwrap_or(&empty);
        let ts_i = self.target_sentiment(i)?;
        let ts_j = self.target_sentiment(j)?;
        let conflict_vector = ts_i.iter().zip(&ts_j).map(|(x, y)| (x - y).abs()).collect();
        let common_threads: Vec<&String> = a.threads.intersection(&b.threads).collect();
        let common_sources = self
            .history
            .sources
            .iter()
            .map(|s| {
                common_threads
                    .iter()
                    .filter(|t| self.thread_source.get(t.as_str()) == Some(&s.as_str()))
                    .count()
            })
            .collect();
        let history = self.pairs.get(&canonical(i, j));
        let mutual = history.map_or(0, Vec::len);
        let previous_conflict = match history {
            Some(h) if !h.is_empty() => h.iter().sum::<f64>() / h.len() as f64,
            _ => 0.0,
        };
        Ok(PairFeatures {
            common_token_weight: self.common_token_weight(a, b),
            conflict_vector,
            common_sources,
            common_discussions: common_threads.len(),
            mutual_engagements: mutual,
            previous_conflict,
            neighbor_counts: [a.conflicting, a.peaceful, b.conflicting, b.peaceful],
        })
    }

    /// Number of past interactions between the two users.
    pub fn mutual_engagements(&self, i: &str, j: &str) -> usize {
        self.pairs.get(&canonical(i, j)).map_or(0, Vec::len)
    }
}

/// Features of a user pair at one prediction instant.
pub fn pair_features(history: &History, i: &str, j: &str, as_of: i64) -> Result<PairFeatures> {
    history.view(as_of).pair_features(i, j)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFeatures {
    pub common_token_weight: f64,
    pub conflict_vector: Vec<f64>,
    pub common_sources: Vec<usize>,
    pub common_discussions: usize,
    pub mutual_engagements: usize,
    pub previous_conflict: f64,
    /// Conflicting and non-conflicting engagement counts of the first user,
    /// then of the second.
    pub neighbor_counts: [usize; 4],
}

/// Feature groups fed to a pair classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMask {
    /// Every group.
    #[default]
    All,
    /// Common-token weight and conflict vector.
    Text,
    /// Common sources, common discussions and mutual engagements.
    Net,
}

impl std::str::FromStr for FeatureMask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(FeatureMask::All),
            "text" => Ok(FeatureMask::Text),
            "net" => Ok(FeatureMask::Net),
            other => Err(Error::invalid(format!("unknown feature mask `{other}`"))),
        }
    }
}

impl FeatureMask {
    pub fn name(self) -> &'static str {
        match self {
            FeatureMask::All => "all",
            FeatureMask::Text => "text",
            FeatureMask::Net => "net",
        }
    }
}

impl PairFeatures {
    fn text_block(&self, v: &mut Vec<f64>) {
        v.push(self.common_token_weight);
        v.extend_from_slice(&self.conflict_vector);
    }

    fn net_block(&self, v: &mut Vec<f64>) {
        v.extend(self.common_sources.iter().map(|&c| c as f64));
        v.push(self.common_discussions as f64);
        v.push(self.mutual_engagements as f64);
    }

    pub fn to_vec(&self, mask: FeatureMask) -> Vec<f64> {
        let mut v = Vec::new();
        match mask {
            FeatureMask::Text => self.text_block(&mut v),
            FeatureMask::Net => self.net_block(&mut v),
            FeatureMask::All => {
                self.text_block(&mut v);
                self.net_block(&mut v);
                v.push(self.previous_conflict);
                v.extend(self.neighbor_counts.iter().map(|&c| c as f64));
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comment(id: &str, user: &str, time: i64, thread: &str, text: &str, td: &[(usize, u8)]) -> HistoryComment {
        HistoryComment {
            id: id.into(),
            user: user.into(),
            time,
            thread: thread.into(),
            source: if thread == "t1" { "alpha".into() } else { "beta".into() },
            tokens: text.split_whitespace().map(String::from).collect(),
            td: td.to_vec(),
            features: vec![time as f64, 1.0],
        }
    }

    fn inter(a: &str, b: &str, time: i64, cf: f64) -> HistoryInteraction {
        HistoryInteraction {
            user_a: a.into(),
            user_b: b.into(),
            time,
            cf,
        }
    }

    fn history() -> History {
        History::new(
            vec![
                comment("c1", "ann", 10, "t1", "tax plan fails", &[(0, 3)]),
                comment("c2", "bob", 20, "t1", "tax plan works", &[(0, 1)]),
                comment("c3", "cat", 30, "t2", "weather nice", &[]),
                comment("c4", "bob", 40, "t2", "nice tax", &[(0, 1), (1, 2)]),
                comment("c5", "ann", 500, "t2", "later words", &[(1, 3)]),
            ],
            vec![inter("ann", "bob", 20, 2.0), inter("cat", "bob", 40, 0.0), inter("bob", "ann", 500, 4.0)],
            2,
            vec!["alpha".into(), "beta".into()],
            1.0,
        )
    }

    #[test]
    fn target_sentiment_examples() {
        let vs = vec![
            TdSentimentVector::from_values(vec![1, 0]).unwrap(),
            TdSentimentVector::from_values(vec![3, 0]).unwrap(),
        ];
        assert_eq!(user_target_sentiment(&vs, 0), 2.0);
        assert_eq!(user_target_sentiment(&vs[1..], 0), 3.0);
        assert_eq!(user_target_sentiment(&vs, 1), 0.0);
    }

    #[test]
    fn pair_features_before_cut() {
        let h = history();
        let f = pair_features(&h, "ann", "bob", 100).unwrap();
        assert_eq!(f.conflict_vector, vec![2.0, 2.0]);
        assert_eq!(f.mutual_engagements, 1);
        assert_eq!(f.previous_conflict, 2.0);
        assert_eq!(f.common_discussions, 1);
        assert_eq!(f.common_sources, vec![1, 0]);
        assert_eq!(f.neighbor_counts, [1, 0, 1, 1]);
        // shared grams: tax (df 3), plan (df 2), "tax plan" (df 2) over 4 comments
        let n: f64 = 4.0;
        let expected = 2.0 * (n / 2.0).ln() + 2.0 * (n / 2.0).ln() + 3.0 * (n / 3.0).ln();
        assert!((f.common_token_weight - expected).abs() < 1e-12);
    }

    #[test]
    fn never_met_pair_defaults() {
        let f = pair_features(&history(), "ann", "cat", 100).unwrap();
        assert_eq!((f.mutual_engagements, f.previous_conflict), (0, 0.0));
        assert_eq!(f.common_token_weight, 0.0);
    }

    #[test]
    fn symmetric_groups() {
        let h = history();
        let ab = pair_features(&h, "ann", "bob", 1000).unwrap();
        let ba = pair_features(&h, "bob", "ann", 1000).unwrap();
        assert_eq!(ab.conflict_vector, ba.conflict_vector);
        assert_eq!(ab.common_sources, ba.common_sources);
        assert_eq!(ab.common_discussions, ba.common_discussions);
        assert_eq!(ab.mutual_engagements, ba.mutual_engagements);
        assert_eq!(ab.common_token_weight, ba.common_token_weight);
    }

    #[test]
    fn truncation_does_not_change_features() {
        let h = history();
        let t = h.truncated(100);
        assert_eq!(pair_features(&h, "ann", "bob", 100).unwrap(), pair_features(&t, "ann", "bob", 100).unwrap());
        assert_ne!(pair_features(&h, "ann", "bob", 1000).unwrap(), pair_features(&h, "ann", "bob", 100).unwrap());
    }

    #[test]
    fn unknown_user_is_an_error() {
        assert!(matches!(pair_features(&history(), "ann", "zed", 100), Err(Error::UnknownUser(_))));
    }

    #[test]
    fn node_features_average_and_flag() {
        let h = history();
        let v = h.view(100);
        let f = v.node_features("bob", 2).unwrap();
        assert_eq!(f.mean, vec![30.0, 1.0]);
        assert_eq!(f.source_flags, vec![1, 1]);
        assert_eq!(v.node_features("ann", 2).unwrap().source_flags, vec![1, 0]);
        let none = h.view(0).node_features("ann", 2).unwrap();
        assert_eq!(none.to_vec(), vec![0.0; 4]);
    }

    #[test]
    fn masks_select_groups() {
        let f = pair_features(&history(), "ann", "bob", 100).unwrap();
        assert_eq!(f.to_vec(FeatureMask::Text).len(), 1 + 2);
        assert_eq!(f.to_vec(FeatureMask::Net), vec![1.0, 0.0, 1.0, 1.0]);
        assert_eq!(f.to_vec(FeatureMask::All).len(), 3 + 4 + 1 + 4);
    }

    #[test]
    fn top_sources_rank_by_count_then_name() {
        let s = top_sources(["b", "a", "c", "c", "b"], 2);
        assert_eq!(s, vec!["b".to_string(), "c".to_string()]);
    }
}
