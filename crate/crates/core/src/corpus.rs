//! Ingestion of comments, articles and threads from line-delimited JSON, and
//! derivation of reply-pair interactions.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub id: String,
    pub thread_id: String,
    #[serde(default)]
    pub parent_id: Option<String>,
    pub author: String,
    pub created_utc: i64,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub url: String,
    pub source: String,
    pub title: String,
    pub text: String,
    pub posted_utc: i64,
}

impl Article {
    /// Title and body as one text, with a sentence break after the title.
    pub fn full_text(&self) -> String {
        let title = self.title.trim();
        if title.is_empty() {
            return self.text.clone();
        }
        if title.ends_with(['.', '!', '?']) {
            format!("{title} {}", self.text)
        } else {
            format!("{title}. {}", self.text)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thread {
    pub id: String,
    pub article_id: String,
    pub created_utc: i64,
    /// Comment ids ordered by creation time, then id.
    #[serde(default)]
    pub comment_ids: Vec<String>,
    /// False when `article_id` does not resolve to an ingested article.
    #[serde(default = "yes")]
    pub linked: bool,
}

fn yes() -> bool {
    true
}

/// A direct reply from `user_b` (comment b) to `user_a` (comment a).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interaction {
    pub user_a: String,
    pub user_b: String,
    pub comment_a_id: String,
    pub comment_b_id: String,
    pub time_utc: i64,
    /// Tree depth of the parent comment (top-level comments have depth 0).
    pub depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestOptions {
    /// Threads with fewer comments are dropped.
    pub min_thread_comments: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            min_thread_comments: 10,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub comments_skipped: usize,
    pub comments_duplicate: usize,
    pub comments_without_thread: usize,
    pub articles_skipped: usize,
    pub articles_duplicate: usize,
    pub threads_skipped: usize,
    pub threads_duplicate: usize,
    pub threads_dropped_small: usize,
    pub threads_unlinked: usize,
    pub orphan_comments: usize,
    pub parent_time_violations: usize,
}

/// Immutable, indexed view of an ingested corpus.
#[derive(Debug, Clone)]
pub struct CorpusStore {
    comments: Vec<Comment>,
    comment_index: HashMap<String, usize>,
    articles: Vec<Article>,
    article_index: HashMap<String, usize>,
    threads: Vec<Thread>,
    thread_index: HashMap<String, usize>,
    parent: Vec<Option<usize>>,
    depth: Vec<usize>,
    report: IngestReport,
}

#[derive(Deserialize)]
struct ThreadRecord {
    id: String,
    article_id: String,
    created_utc: i64,
}

fn read_records<T, R>(reader: R, skipped: &mut usize, duplicates: &mut usize, id: fn(&T) -> &str) -> Result<Vec<T>>
where
    T: for<'de> Deserialize<'de>,
    R: BufRead,
{
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<T>(&line) {
            Ok(rec) => {
                if seen.insert(id(&rec).to_string()) {
                    out.push(rec);
                } else {
                    *duplicates += 1;
                }
            }
            Err(e) => {
                log::debug!("skipping malformed line: {e}");
                *skipped += 1;
            }
        }
    }
    Ok(out)
}

fn valid_comment(c: &Comment) -> bool {
    !c.id.is_empty() && !c.thread_id.is_empty() && !c.author.is_empty()
}

fn valid_article(a: &Article) -> bool {
    !a.id.is_empty() && !a.source.is_empty() && a.posted_utc > 0
}

impl CorpusStore {
    /// Ingest the three line-delimited streams.
    ///
    /// Malformed lines are counted and skipped; duplicate ids keep their first
    /// occurrence. Comments whose thread is unknown are dropped, as are
    /// threads with fewer than `min_thread_comments` comments.
    pub fn ingest<C, A, T>(comments: C, articles: A, threads: T, opts: IngestOptions) -> Result<Self>
    where
        C: BufRead,
        A: BufRead,
        T: BufRead,
    {
        let mut report = IngestReport::default();

        let mut articles: Vec<Article> = read_records(
            articles,
            &mut report.articles_skipped,
            &mut report.articles_duplicate,
            |a: &Article| &a.id,
        )?;
        let before = articles.len();
        articles.retain(valid_article);
        report.articles_skipped += before - articles.len();

        let thread_recs: Vec<ThreadRecord> = read_records(
            threads,
            &mut report.threads_skipped,
            &mut report.threads_duplicate,
            |t: &ThreadRecord| &t.id,
        )?;

        let mut comments: Vec<Comment> = read_records(
            comments,
            &mut report.comments_skipped,
            &mut report.comments_duplicate,
            |c: &Comment| &c.id,
        )?;
        let before = comments.len();
        comments.retain(valid_comment);
        report.comments_skipped += before - comments.len();

        let article_index: HashMap<String, usize> = articles
            .iter()
            .enumerate()
            .map(|(i, a)| (a.id.clone(), i))
            .collect();

        let mut per_thread: HashMap<&str, usize> = HashMap::new();
        for c in &comments {
            *per_thread.entry(c.thread_id.as_str()).or_default() += 1;
        }
        let mut kept_threads = Vec::new();
        let declared: std::collections::HashSet<String> =
            thread_recs.iter().map(|t| t.id.clone()).collect();
        for t in thread_recs {
            let n = per_thread.get(t.id.as_str()).copied().unwrap_or(0);
            if n < opts.min_thread_comments {
                report.threads_dropped_small += 1;
                continue;
            }
            let linked = article_index.contains_key(&t.article_id);
            if !linked {
                report.threads_unlinked += 1;
            }
            kept_threads.push(Thread {
                id: t.id,
                article_id: t.article_id,
                created_utc: t.created_utc,
                comment_ids: Vec::new(),
                linked,
            });
        }
        let thread_index: HashMap<String, usize> = kept_threads
            .iter()
            .enumerate()
            .map(|(i, t)| (t.id.clone(), i))
            .collect();

        report.comments_without_thread = comments
            .iter()
            .filter(|c| !declared.contains(c.thread_id.as_str()))
            .count();
        comments.retain(|c| thread_index.contains_key(&c.thread_id));

        let comment_index: HashMap<String, usize> = comments
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id.clone(), i))
            .collect();

        for c in &comments {
            kept_threads[thread_index[&c.thread_id]].comment_ids.push(c.id.clone());
        }
        for t in &mut kept_threads {
            t.comment_ids.sort_by(|a, b| {
                let (ca, cb) = (&comments[comment_index[a]], &comments[comment_index[b]]);
                (ca.created_utc, &ca.id).cmp(&(cb.created_utc, &cb.id))
            });
        }

        let mut parent = vec![None; comments.len()];
        for (i, c) in comments.iter().enumerate() {
            let Some(pid) = c.parent_id.as_deref() else { continue };
            if pid.is_empty() || pid == c.thread_id {
                continue;
            }
            match comment_index.get(pid) {
                Some(&p) if comments[p].thread_id == c.thread_id && p != i => {
                    parent[i] = Some(p);
                    if comments[p].created_utc > c.created_utc {
                        report.parent_time_violations += 1;
                    }
                }
                _ => report.orphan_comments += 1,
            }
        }
        let depth = resolve_depths(&mut parent);

        Ok(CorpusStore {
            comments,
            comment_index,
            articles,
            article_index,
            threads: kept_threads,
            thread_index,
            parent,
            depth,
            report,
        })
    }

    pub fn ingest_paths(
        comments: &Path,
        articles: &Path,
        threads: &Path,
        opts: IngestOptions,
    ) -> Result<Self> {
        let open = |p: &Path| {
            File::open(p)
                .map(BufReader::new)
                .map_err(|e| Error::io(p, e))
        };
        Self::ingest(open(comments)?, open(articles)?, open(threads)?, opts)
    }

    pub fn report(&self) -> &IngestReport {
        &self.report
    }

    pub fn comments(&self) -> &[Comment] {
        &self.comments
    }

    pub fn articles(&self) -> &[Article] {
        &self.articles
    }

    pub fn threads(&self) -> &[Thread] {
        &self.threads
    }

    pub fn comment(&self, id: &str) -> Option<&Comment> {
        self.comment_index.get(id).map(|&i| &self.comments[i])
    }

    pub fn article(&self, id: &str) -> Option<&Article> {
        self.article_index.get(id).map(|&i| &self.articles[i])
    }

    pub fn thread(&self, id: &str) -> Option<&Thread> {
        self.thread_index.get(id).map(|&i| &self.threads[i])
    }

    /// Article discussed in a thread, if linked.
    pub fn thread_article(&self, thread_id: &str) -> Option<&Article> {
        self.thread(thread_id).and_then(|t| self.article(&t.article_id))
    }

    /// Resolved parent comment (orphans and top-level comments have none).
    pub fn parent_of(&self, comment_id: &str) -> Option<&Comment> {
        let i = *self.comment_index.get(comment_id)?;
        self.parent[i].map(|p| &self.comments[p])
    }

    pub fn depth_of(&self, comment_id: &str) -> Option<usize> {
        self.comment_index.get(comment_id).map(|&i| self.depth[i])
    }

    /// Reply interactions of one thread, ordered by child time then child id.
    pub fn reply_pairs(&self, thread_id: &str) -> Result<Vec<Interaction>> {
        let thread = self
            .thread(thread_id)
            .ok_or_else(|| Error::invalid(format!("unknown thread `{thread_id}`")))?;
        let mut out = Vec::new();
        for cid in &thread.comment_ids {
            let ci = self.comment_index[cid];
            let Some(pi) = self.parent[ci] else { continue };
            let (parent, child) = (&self.comments[pi], &self.comments[ci]);
            if parent.author == child.author {
                continue;
            }
            out.push(Interaction {
                user_a: parent.author.clone(),
                user_b: child.author.clone(),
                comment_a_id: parent.id.clone(),
                comment_b_id: child.id.clone(),
                time_utc: child.created_utc,
                depth: self.depth[pi],
            });
        }
        // comment_ids are already sorted by (created_utc, id)
        Ok(out)
    }

    /// Interactions of every thread, ordered by time then child comment id.
    pub fn interactions(&self) -> Vec<Interaction> {
        let mut all: Vec<Interaction> = self
            .threads
            .iter()
            .flat_map(|t| self.reply_pairs(&t.id).unwrap_or_default())
            .collect();
        all.sort_by(|a, b| (a.time_utc, &a.comment_b_id).cmp(&(b.time_utc, &b.comment_b_id)));
        all
    }

    /// Deterministic JSON summary of the store contents.
    pub fn summary(&self) -> String {
        let mut sources: BTreeMap<&str, usize> = BTreeMap::new();
        for a in &self.articles {
            *sources.entry(a.source.as_str()).or_default() += 1;
        }
        let users: std::collections::BTreeSet<&str> =
            self.comments.iter().map(|c| c.author.as_str()).collect();
        let summary = serde_json::json!({
            "comments": self.comments.len(),
            "articles": self.articles.len(),
            "threads": self.threads.len(),
            "users": users.len(),
            "interactions": self.interactions().len(),
            "max_depth": self.depth.iter().copied().max().unwrap_or(0),
            "sources": sources,
            "report": self.report,
        });
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    }
}

/// Depth of every comment; parent cycles are broken by making the comment
/// that closes the cycle top-level.
fn resolve_depths(parent: &mut [Option<usize>]) -> Vec<usize> {
    const UNSET: usize = usize::MAX;
    let n = parent.len();
    let mut depth = vec![UNSET; n];
    let mut on_stack = vec![false; n];
    for start in 0..n {
        if depth[start] != UNSET {
            continue;
        }
        let mut chain = Vec::new();
        let mut cur = start;
        loop {
            if depth[cur] != UNSET {
                break;
            }
            if on_stack[cur] {
                parent[cur] = None;
                depth[cur] = 0;
                break;
            }
            on_stack[cur] = true;
            chain.push(cur);
            match parent[cur] {
                Some(p) => cur = p,
                None => {
                    depth[cur] = 0;
                    break;
                }
            }
        }
        while let Some(c) = chain.pop() {
            on_stack[c] = false;
            if depth[c] == UNSET {
                depth[c] = parent[c].map_or(0, |p| depth[p] + 1);
            }
        }
    }
    depth
}
