use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{StageStatus, Workspace};
use crate::conflict::{conflict_factor, news_conflict_score, normalize_by_common, pair_state, PairState, ScoreRow};
use crate::corpus::{CorpusStore, IngestOptions, Interaction};
use crate::error::{Error, Result};
use crate::eval::{
    classification_metrics, ranking_metrics, regression_metrics, write_metrics_json, MetricRecord, RankedList,
};
use crate::features::{
    comment_features, article_features, top_sources, ArticleFeatures, Embeddings, FeatureMask, FeatureResources,
    History, HistoryComment, HistoryInteraction, HistoryView, SubjectivityLexicon, WordList,
};
use crate::graph::{
    build_graph, cluster_report, depth_conflict_profile, source_conflict_series, write_clusters_csv,
    write_depth_csv, write_edges_csv, write_series_csv, ScoredInteraction,
};
use crate::learn::{
    gcn_evaluate, gcn_forward, gcn_train, lasso_group_importance, pair_samples, permutation_importance, rf_fit,
    rows_to_array, sample_pairs, select_lambda_ebic, stratified_split, svm_fit, svr_fit, time_ordered_split,
    write_training_log, GcnCheckpoint, GcnParams, GcnSample, GroupImportance, LassoModel, PairCandidate,
    RandomForest, Regressor, SamplingConfig, SvmModel, SvrModel,
};
use crate::sentiment::{aggregate_sentiment, LexiconProvider, OverrideProvider, PolarityLexicon, TdSentimentVector};
use crate::terms::{build_term_set, resolve_pronouns, Stopwords, TermSet};
use crate::text::pretagged::{read_pretagged, write_pretagged};
use crate::text::{word_tokens, RuleTagger, TaggedDocument};

const INGEST_JSON: &str = "ingest.json";
const INTERACTIONS: &str = "interactions.csv";
const TAGGED: &str = "tagged.jsonl";
const TERMS: &str = "terms.csv";
const SENTIMENT: &str = "sentiment.jsonl";
const SCORES: &str = "scores.csv";
const NEWS_CONFLICT: &str = "news_conflict.csv";
const GRAPH: &str = "graph.csv";
const ARTICLE_FEATURES: &str = "article_features.csv";
const COMMENT_FEATURES: &str = "comment_features.csv";
const PAIRS: &str = "pairs.csv";

/// Source recorded for comments whose thread has no article.
const UNLINKED_SOURCE: &str = "unlinked";

/// Learning task of `train`, `predict` and `eval`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    NewsRegress,
    PairSvm,
    PairGcn,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::NewsRegress, Task::PairSvm, Task::PairGcn];

    pub fn name(self) -> &'static str {
        match self {
            Task::NewsRegress => "news-regress",
            Task::PairSvm => "pair-svm",
            Task::PairGcn => "pair-gcn",
        }
    }

    fn model(self) -> String {
        format!("models/{}.json", self.name())
    }

    fn metrics(self) -> String {
        format!("metrics/{}.json", self.name())
    }

    fn predictions(self) -> String {
        format!("predictions/{}.csv", self.name())
    }
}

/// Export of `analyze`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalyzeTask {
    Sources,
    Depth,
    Clusters,
    States,
}

impl AnalyzeTask {
    pub const ALL: [AnalyzeTask; 4] = [
        AnalyzeTask::Sources,
        AnalyzeTask::Depth,
        AnalyzeTask::Clusters,
        AnalyzeTask::States,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AnalyzeTask::Sources => "sources",
            AnalyzeTask::Depth => "depth",
            AnalyzeTask::Clusters => "clusters",
            AnalyzeTask::States => "states",
        }
    }
}

// ---------------------------------------------------------------- helpers

fn read_csv<T: DeserializeOwned>(ws: &Workspace, path: &PathBuf) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(ws.open_read(path)?);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn write_csv<T: Serialize>(ws: &Workspace, name: &str, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(ws.create(name)?);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(Error::Stream)?;
    Ok(())
}

/// CSV writer for rows with a header chosen at run time.
fn write_table(ws: &Workspace, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(ws.create(name)?);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(Error::Stream)?;
    Ok(())
}

fn write_json<T: Serialize + ?Sized>(ws: &Workspace, name: &str, value: &T) -> Result<()> {
    let mut w = ws.create(name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(Error::Stream)?;
    w.flush().map_err(Error::Stream)?;
    Ok(())
}

fn write_metrics(ws: &Workspace, name: &str, records: &[MetricRecord]) -> Result<()> {
    let mut w = ws.create(name)?;
    write_metrics_json(&mut w, records)?;
    w.flush().map_err(Error::Stream)?;
    Ok(())
}

fn read_json<T: DeserializeOwned>(ws: &Workspace, path: &PathBuf) -> Result<T> {
    Ok(serde_json::from_reader(ws.open_read(path)?)?)
}

fn parse_f64(s: &str, what: &'static str) -> Result<f64> {
    s.parse().map_err(|_| Error::Malformed {
        what,
        detail: format!("`{s}` is not a number"),
    })
}

fn num(v: f64) -> String {
    v.to_string()
}

fn corpus_inputs(ws: &Workspace) -> Result<Vec<(&'static str, PathBuf)>> {
    let c = &ws.config.input;
    Ok(vec![
        ("comments", ws.input(&c.comments, "comments")?),
        ("articles", ws.input(&c.articles, "articles")?),
        ("threads", ws.input(&c.threads, "threads")?),
    ])
}

fn load_corpus(ws: &Workspace) -> Result<CorpusStore> {
    let c = &ws.config.input;
    CorpusStore::ingest_paths(
        &ws.input(&c.comments, "comments")?,
        &ws.input(&c.articles, "articles")?,
        &ws.input(&c.threads, "threads")?,
        IngestOptions {
            min_thread_comments: c.min_thread_comments,
        },
    )
}

fn stopwords(ws: &Workspace) -> Result<Stopwords> {
    match &ws.config.resources.stopwords {
        Some(p) => Stopwords::read(ws.open_read(&ws.input(p, "stopwords")?)?),
        None => Ok(Stopwords::english()),
    }
}

fn optional_input(
    ws: &Workspace,
    inputs: &mut Vec<(&'static str, PathBuf)>,
    label: &'static str,
    path: &Option<PathBuf>,
) -> Result<()> {
    if let Some(p) = path {
        inputs.push((label, ws.input(p, label)?));
    }
    Ok(())
}

fn read_tagged(ws: &Workspace) -> Result<Vec<TaggedDocument>> {
    let path = ws.require("terms", TAGGED, "ingest")?;
    let mut ids = Vec::new();
    for line in ws.open_read(&path)?.lines() {
        let line = line.map_err(Error::Stream)?;
        if let Ok(v) = serde_json::from_str::<serde_json::Value>(&line) {
            if let Some(id) = v.get("comment_id").and_then(|i| i.as_str()) {
                ids.push(id.to_string());
            }
        }
    }
    let mut docs = read_pretagged(ws.open_read(&path)?)?.docs;
    // keep file order: articles first, then comments
    Ok(ids.into_iter().filter_map(|id| docs.remove(&id)).collect())
}

#[derive(Debug, Serialize, Deserialize)]
struct SentimentRecord {
    doc_id: String,
    td: Vec<(usize, u8)>,
}

fn read_terms(ws: &Workspace, stage: &'static str) -> Result<TermSet> {
    let path = ws.require(stage, TERMS, "terms")?;
    TermSet::read_csv(ws.open_read(&path)?)
}

fn read_sentiment(ws: &Workspace, stage: &'static str, terms: usize) -> Result<HashMap<String, TdSentimentVector>> {
    let path = ws.require(stage, SENTIMENT, "sentiment")?;
    let mut out = HashMap::new();
    for line in ws.open_read(&path)?.lines() {
        let line = line.map_err(Error::Stream)?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SentimentRecord = serde_json::from_str(&line)?;
        out.insert(rec.doc_id, TdSentimentVector::from_sparse(terms, &rec.td)?);
    }
    Ok(out)
}

fn td_of<'a>(map: &'a HashMap<String, TdSentimentVector>, id: &str) -> Result<&'a TdSentimentVector> {
    map.get(id).ok_or_else(|| Error::Malformed {
        what: "sentiment vectors",
        detail: format!("no vector for document {id}"),
    })
}

/// A reply with its conflict factor, joined from the interaction and score
/// exports.
#[derive(Debug, Clone)]
struct Engagement {
    inter: Interaction,
    score: ScoreRow,
}

fn read_engagements(ws: &Workspace, stage: &'static str) -> Result<Vec<Engagement>> {
    let inters: Vec<Interaction> = read_csv(ws, &ws.require(stage, INTERACTIONS, "ingest")?)?;
    let scores: Vec<ScoreRow> = read_csv(ws, &ws.require(stage, SCORES, "conflict")?)?;
    if inters.len() != scores.len() {
        return Err(Error::Malformed {
            what: SCORES,
            detail: format!("{} rows for {} interactions; rerun `conflict`", scores.len(), inters.len()),
        });
    }
    inters
        .into_iter()
        .zip(scores)
        .map(|(inter, score)| {
            if inter.comment_a_id != score.doc_a || inter.comment_b_id != score.doc_b {
                return Err(Error::Malformed {
                    what: SCORES,
                    detail: format!("row for {} does not match interaction {}", score.doc_b, inter.comment_b_id),
                });
            }
            Ok(Engagement { inter, score })
        })
        .collect()
}

fn scored(engagements: &[Engagement]) -> Vec<ScoredInteraction> {
    engagements
        .iter()
        .map(|e| ScoredInteraction {
            user_a: e.inter.user_a.clone(),
            user_b: e.inter.user_b.clone(),
            time: e.inter.time_utc,
            cf: e.score.cf,
        })
        .collect()
}

// ---------------------------------------------------------------- ingest

/// Load and validate the corpus, export its reply interactions and tag
/// every article and comment.
pub fn ingest(ws: &Workspace) -> Result<StageStatus> {
    let mut inputs = corpus_inputs(ws)?;
    optional_input(ws, &mut inputs, "pretagged", &ws.config.input.pretagged)?;
    optional_input(ws, &mut inputs, "persons", &ws.config.resources.persons)?;
    let settings = json!({ "min_thread_comments": ws.config.input.min_thread_comments });
    ws.stage("ingest", &inputs, &settings, &[INGEST_JSON, INTERACTIONS, TAGGED], || {
        let corpus = load_corpus(ws)?;
        let mut w = ws.create(INGEST_JSON)?;
        writeln!(w, "{}", corpus.summary()).map_err(Error::Stream)?;
        w.flush().map_err(Error::Stream)?;

        let header = ["user_a", "user_b", "comment_a_id", "comment_b_id", "time_utc", "depth"];
        write_csv(ws, INTERACTIONS, &header, &corpus.interactions())?;

        let mut tagger = RuleTagger::new();
        if let Some(p) = &ws.config.resources.persons {
            let names: Vec<String> = ws
                .open_read(&ws.input(p, "persons")?)?
                .lines()
                .collect::<std::io::Result<_>>()
                .map_err(Error::Stream)?;
            tagger = tagger.with_persons(names.iter().map(|n| n.trim()).filter(|n| !n.is_empty()));
        }
        let mut pre = match &ws.config.input.pretagged {
            Some(p) => {
                let parsed = read_pretagged(ws.open_read(&ws.input(p, "pretagged")?)?)?;
                if parsed.skipped > 0 {
                    log::warn!("{} malformed pretagged line(s) skipped", parsed.skipped);
                }
                parsed.docs
            }
            None => BTreeMap::new(),
        };
        let texts = corpus
            .articles()
            .iter()
            .map(|a| (a.id.clone(), a.full_text()))
            .chain(corpus.comments().iter().map(|c| (c.id.clone(), c.body.clone())));
        let mut seen = HashSet::new();
        let mut docs = Vec::new();
        for (id, text) in texts {
            if !seen.insert(id.clone()) {
                return Err(Error::Config(format!(
                    "document id `{id}` is used by both an article and a comment"
                )));
            }
            let doc = pre
                .remove(&id)
                .unwrap_or_else(|| TaggedDocument::from_text(id.as_str(), &text, &tagger));
            docs.push(resolve_pronouns(&doc));
        }
        let mut w = ws.create(TAGGED)?;
        write_pretagged(&mut w, &docs)?;
        w.flush().map_err(Error::Stream)?;
        Ok(())
    })
}

// ---------------------------------------------------------------- terms

pub fn terms(ws: &Workspace) -> Result<StageStatus> {
    let mut inputs = vec![("tagged", ws.require("terms", TAGGED, "ingest")?)];
    optional_input(ws, &mut inputs, "stopwords", &ws.config.resources.stopwords)?;
    ws.stage("terms", &inputs, &json!({}), &[TERMS], || {
        let docs = read_tagged(ws)?;
        let set = build_term_set(&docs, &stopwords(ws)?)?;
        let mut w = ws.create(TERMS)?;
        set.write_csv(&mut w)?;
        w.flush().map_err(Error::Stream)?;
        Ok(())
    })
}

// ---------------------------------------------------------------- sentiment

pub fn sentiment(ws: &Workspace) -> Result<StageStatus> {
    let res = &ws.config.resources;
    let mut inputs = vec![
        ("tagged", ws.require("sentiment", TAGGED, "ingest")?),
        ("terms", ws.require("sentiment", TERMS, "terms")?),
        ("polarity", ws.input(&res.polarity, "polarity lexicon")?),
    ];
    optional_input(ws, &mut inputs, "td_scores", &ws.config.input.td_scores)?;
    ws.stage("sentiment", &inputs, &json!({}), &[SENTIMENT], || {
        let docs = read_tagged(ws)?;
        let terms = read_terms(ws, "sentiment")?;
        let lexicon = PolarityLexicon::read_tsv(ws.open_read(&ws.input(&res.polarity, "polarity lexicon")?)?)?;
        let mut provider = OverrideProvider::new(LexiconProvider::new(lexicon));
        if let Some(p) = &ws.config.input.td_scores {
            let rejected = provider.read_jsonl(ws.open_read(&ws.input(p, "td_scores")?)?)?;
            if rejected > 0 {
                log::warn!("{rejected} td score line(s) rejected");
            }
        }
        let mut w = ws.create(SENTIMENT)?;
        for doc in &docs {
            let v = aggregate_sentiment(doc, &terms, &provider)?;
            let rec = SentimentRecord {
                doc_id: doc.id.clone(),
                td: v.sparse(),
            };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n").map_err(Error::Stream)?;
        }
        w.flush().map_err(Error::Stream)?;
        Ok(())
    })
}

// ---------------------------------------------------------------- conflict

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NewsConflictRow {
    article_id: String,
    source: String,
    posted_utc: i64,
    nc: f64,
    n_comments: usize,
}

/// Comment ids per article over all threads linked to it.
fn article_comments(corpus: &CorpusStore) -> BTreeMap<&str, Vec<&str>> {
    let mut out: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for t in corpus.threads() {
        if let Some(a) = corpus.thread_article(&t.id) {
            out.entry(a.id.as_str())
                .or_default()
                .extend(t.comment_ids.iter().map(String::as_str));
        }
    }
    out
}

pub fn conflict(ws: &Workspace) -> Result<StageStatus> {
    let mut inputs = corpus_inputs(ws)?;
    inputs.push(("interactions", ws.require("conflict", INTERACTIONS, "ingest")?));
    inputs.push(("terms", ws.require("conflict", TERMS, "terms")?));
    inputs.push(("sentiment", ws.require("conflict", SENTIMENT, "sentiment")?));
    let settings = json!({ "tau": ws.config.tau, "min_thread_comments": ws.config.input.min_thread_comments });
    ws.stage("conflict", &inputs, &settings, &[SCORES, NEWS_CONFLICT, GRAPH], || {
        let terms = read_terms(ws, "conflict")?;
        let td = read_sentiment(ws, "conflict", terms.len())?;
        let inters: Vec<Interaction> = read_csv(ws, &ws.require("conflict", INTERACTIONS, "ingest")?)?;
        let mut rows = Vec::with_capacity(inters.len());
        let mut events = Vec::with_capacity(inters.len());
        for i in &inters {
            let cf = conflict_factor(td_of(&td, &i.comment_a_id)?, td_of(&td, &i.comment_b_id)?)?;
            rows.push(ScoreRow::new(&i.comment_a_id, &i.comment_b_id, cf));
            events.push(ScoredInteraction {
                user_a: i.user_a.clone(),
                user_b: i.user_b.clone(),
                time: i.time_utc,
                cf: cf.value,
            });
        }
        let header = ["doc_a", "doc_b", "cf", "common_terms", "cf_normalized"];
        write_csv(ws, SCORES, &header, &rows)?;

        let corpus = load_corpus(ws)?;
        let by_article = article_comments(&corpus);
        let mut news = Vec::new();
        for a in corpus.articles() {
            let Some(ids) = by_article.get(a.id.as_str()).filter(|c| !c.is_empty()) else {
                continue;
            };
            let comments = ids
                .iter()
                .map(|id| td_of(&td, id).cloned())
                .collect::<Result<Vec<_>>>()?;
            news.push(NewsConflictRow {
                article_id: a.id.clone(),
                source: a.source.clone(),
                posted_utc: a.posted_utc,
                nc: news_conflict_score(td_of(&td, &a.id)?, &comments)?,
                n_comments: comments.len(),
            });
        }
        let header = ["article_id", "source", "posted_utc", "nc", "n_comments"];
        write_csv(ws, NEWS_CONFLICT, &header, &news)?;

        let graph = build_graph(&events)?;
        let mut w = ws.create(GRAPH)?;
        write_edges_csv(&mut w, &graph, ws.config.tau)?;
        w.flush().map_err(Error::Stream)?;
        Ok(())
    })
}

// ---------------------------------------------------------------- features

fn feature_inputs(ws: &Workspace, stage: &'static str) -> Result<Vec<(&'static str, PathBuf)>> {
    let res = &ws.config.resources;
    let mut inputs = corpus_inputs(ws)?;
    inputs.extend([
        ("terms", ws.require(stage, TERMS, "terms")?),
        ("sentiment", ws.require(stage, SENTIMENT, "sentiment")?),
        ("news_conflict", ws.require(stage, NEWS_CONFLICT, "conflict")?),
        ("interactions", ws.require(stage, INTERACTIONS, "ingest")?),
        ("scores", ws.require(stage, SCORES, "conflict")?),
        ("polarity", ws.input(&res.polarity, "polarity lexicon")?),
        ("controversy", ws.input(&res.controversy, "controversy lexicon")?),
        ("bias", ws.input(&res.bias, "bias lexicon")?),
        ("subjectivity", ws.input(&res.subjectivity, "subjectivity lexicon")?),
    ]);
    optional_input(ws, &mut inputs, "embeddings", &res.embeddings)?;
    optional_input(ws, &mut inputs, "stopwords", &res.stopwords)?;
    Ok(inputs)
}

fn resources(ws: &Workspace, corpus: &CorpusStore) -> Result<FeatureResources> {
    let res = &ws.config.resources;
    let open = |p: &PathBuf, what: &str| ws.input(p, what).and_then(|p| ws.open_read(&p));
    let embeddings = match &res.embeddings {
        Some(p) => Some(Embeddings::read(open(p, "embeddings")?)?),
        None => None,
    };
    let texts: Vec<String> = corpus
        .articles()
        .iter()
        .map(|a| a.full_text())
        .chain(corpus.comments().iter().map(|c| c.body.clone()))
        .collect();
    Ok(FeatureResources {
        polarity: PolarityLexicon::read_tsv(open(&res.polarity, "polarity lexicon")?)?,
        controversy: WordList::read(open(&res.controversy, "controversy lexicon")?)?,
        bias: WordList::read(open(&res.bias, "bias lexicon")?)?,
        subjectivity: SubjectivityLexicon::read(open(&res.subjectivity, "subjectivity lexicon")?)?,
        embeddings,
        ..Default::default()
    }
    .with_corpus(&texts))
}

fn comment_source<'a>(corpus: &'a CorpusStore, thread: &str) -> &'a str {
    corpus
        .thread_article(thread)
        .map_or(UNLINKED_SOURCE, |a| a.source.as_str())
}

/// Labelled, balanced pairs for every prediction instant on the snapshot
/// grid that has both history and future events.
pub fn pair_candidates(events: &[ScoredInteraction], config: &super::RunConfig) -> Vec<PairCandidate> {
    let step = config.graph.snapshot_step;
    let (Some(t0), Some(t1)) = (
        events.iter().map(|e| e.time).min(),
        events.iter().map(|e| e.time).max(),
    ) else {
        return Vec::new();
    };
    let sampling = SamplingConfig {
        horizon: config.train.horizon,
        tau: config.tau,
        negatives: config.train.negatives,
        pairs_per_snapshot: config.train.pairs_per_snapshot,
        seed: config.seed,
    };
    let mut out = Vec::new();
    let mut as_of = (t0.div_euclid(step) + 1) * step;
    while as_of <= t1 {
        out.extend(sample_pairs(events, as_of, &sampling));
        as_of += step;
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PairRow {
    user_i: String,
    user_j: String,
    as_of: i64,
    label: u8,
    met_before: bool,
    split: String,
}

impl PairRow {
    fn candidate(&self) -> PairCandidate {
        PairCandidate {
            user_i: self.user_i.clone(),
            user_j: self.user_j.clone(),
            as_of: self.as_of,
            label: self.label,
            met_before: self.met_before,
        }
    }
}

const ARTICLE_META: [&str; 4] = ["article_id", "source", "posted_utc", "nc"];
const COMMENT_META: [&str; 5] = ["comment_id", "author", "thread_id", "created_utc", "source"];

pub fn features(ws: &Workspace) -> Result<StageStatus> {
    let inputs = feature_inputs(ws, "features")?;
    let settings = json!({
        "tau": ws.config.tau,
        "seed": ws.config.seed,
        "min_thread_comments": ws.config.input.min_thread_comments,
        "snapshot_step": ws.config.graph.snapshot_step,
        "horizon": ws.config.train.horizon,
        "negatives": ws.config.train.negatives,
        "pairs_per_snapshot": ws.config.train.pairs_per_snapshot,
        "test_fraction": ws.config.train.test_fraction,
        "dev_fraction": ws.config.train.dev_fraction,
    });
    ws.stage("features", &inputs, &settings, &[ARTICLE_FEATURES, COMMENT_FEATURES, PAIRS], || {
        let corpus = load_corpus(ws)?;
        let terms = read_terms(ws, "features")?;
        let td = read_sentiment(ws, "features", terms.len())?;
        let res = resources(ws, &corpus)?;
        let columns = ArticleFeatures::column_names(terms.terms(), res.embedding_dim());

        let news: Vec<NewsConflictRow> = read_csv(ws, &ws.require("features", NEWS_CONFLICT, "conflict")?)?;
        let mut header: Vec<String> = ARTICLE_META.iter().map(|s| s.to_string()).collect();
        header.extend(columns.iter().cloned());
        let mut rows = Vec::new();
        for n in &news {
            let a = corpus.article(&n.article_id).ok_or_else(|| Error::Malformed {
                what: NEWS_CONFLICT,
                detail: format!("unknown article {}", n.article_id),
            })?;
            let f = article_features(&a.full_text(), td_of(&td, &a.id)?, &res)?;
            let mut row = vec![a.id.clone(), a.source.clone(), a.posted_utc.to_string(), num(n.nc)];
            row.extend(f.to_vec().into_iter().map(num));
            rows.push(row);
        }
        write_table(ws, ARTICLE_FEATURES, &header, &rows)?;

        let mut header: Vec<String> = COMMENT_META.iter().map(|s| s.to_string()).collect();
        header.extend(columns.iter().cloned());
        let mut rows = Vec::new();
        for c in corpus.comments() {
            let f = comment_features(&c.body, td_of(&td, &c.id)?, &res)?;
            let mut row = vec![
                c.id.clone(),
                c.author.clone(),
                c.thread_id.clone(),
                c.created_utc.to_string(),
                comment_source(&corpus, &c.thread_id).to_string(),
            ];
            row.extend(f.to_vec().into_iter().map(num));
            rows.push(row);
        }
        write_table(ws, COMMENT_FEATURES, &header, &rows)?;

        let events = scored(&read_engagements(ws, "features")?);
        let cands = pair_candidates(&events, &ws.config);
        let times: Vec<i64> = cands.iter().map(|c| c.as_of).collect();
        let split = time_ordered_split(&times, ws.config.train.test_fraction, ws.config.train.dev_fraction)?;
        let mut tag = vec![""; cands.len()];
        for (name, idx) in [("train", &split.train), ("dev", &split.dev), ("test", &split.test)] {
            idx.iter().for_each(|&k| tag[k] = name);
        }
        let rows: Vec<PairRow> = cands
            .into_iter()
            .zip(tag)
            .map(|(c, s)| PairRow {
                user_i: c.user_i,
                user_j: c.user_j,
                as_of: c.as_of,
                label: c.label,
                met_before: c.met_before,
                split: s.to_string(),
            })
            .collect();
        let header = ["user_i", "user_j", "as_of", "label", "met_before", "split"];
        write_csv(ws, PAIRS, &header, &rows)
    })
}

// ---------------------------------------------------------------- shared loaders

/// Metadata columns plus the numeric feature block of one export row.
struct FeatureTable {
    columns: Vec<String>,
    meta: Vec<Vec<String>>,
    x: Vec<Vec<f64>>,
}

fn read_feature_table(ws: &Workspace, path: &PathBuf, n_meta: usize, what: &'static str) -> Result<FeatureTable> {
    let mut r = csv::Reader::from_reader(ws.open_read(path)?);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.len() < n_meta {
        return Err(Error::Malformed {
            what,
            detail: "missing metadata columns".into(),
        });
    }
    let mut t = FeatureTable {
        columns: header[n_meta..].to_vec(),
        meta: Vec::new(),
        x: Vec::new(),
    };
    for rec in r.records() {
        let rec = rec?;
        t.meta.push(rec.iter().take(n_meta).map(str::to_string).collect());
        t.x.push(rec.iter().skip(n_meta).map(|v| parse_f64(v, what)).collect::<Result<_>>()?);
    }
    Ok(t)
}

/// Everything known about users, assembled from the stage exports.
fn load_history(ws: &Workspace, stage: &'static str) -> Result<(History, usize)> {
    let corpus = load_corpus(ws)?;
    let terms = read_terms(ws, stage)?;
    let td = read_sentiment(ws, stage, terms.len())?;
    let table = read_feature_table(ws, &ws.require(stage, COMMENT_FEATURES, "features")?, COMMENT_META.len(), COMMENT_FEATURES)?;
    let stop = stopwords(ws)?;
    let mut comments = Vec::with_capacity(table.x.len());
    for (meta, x) in table.meta.into_iter().zip(table.x) {
        let [id, user, thread, time, source] = <[String; 5]>::try_from(meta).expect("five metadata columns");
        let body = corpus.comment(&id).map(|c| c.body.as_str()).unwrap_or_default();
        let tokens = word_tokens(body)
            .into_iter()
            .map(|t| t.to_lowercase())
            .filter(|t| !stop.contains(t))
            .collect();
        comments.push(HistoryComment {
            td: td_of(&td, &id)?.sparse(),
            time: time.parse().map_err(|_| Error::Malformed {
                what: COMMENT_FEATURES,
                detail: format!("bad time `{time}`"),
            })?,
            id,
            user,
            thread,
            source,
            tokens,
            features: x,
        });
    }
    let sources = top_sources(comments.iter().map(|c| c.source.as_str()), ws.config.graph.top_sources);
    let interactions = read_engagements(ws, stage)?
        .into_iter()
        .map(|e| HistoryInteraction {
            user_a: e.inter.user_a,
            user_b: e.inter.user_b,
            time: e.inter.time_utc,
            cf: e.score.cf,
        })
        .collect();
    let dim = table.columns.len();
    Ok((History::new(comments, interactions, terms.len(), sources, ws.config.tau), dim))
}

fn read_pairs(ws: &Workspace, stage: &'static str) -> Result<Vec<PairRow>> {
    read_csv(ws, &ws.require(stage, PAIRS, "features")?)
}

fn pick<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&k| items[k].clone()).collect()
}

fn split_indices(pairs: &[PairRow], name: &str) -> Vec<usize> {
    (0..pairs.len()).filter(|&k| pairs[k].split == name).collect()
}

/// Column group of a feature name, for importance reports.
fn feature_group(column: &str) -> &'static str {
    match column {
        c if c.starts_with("td:") => "td",
        c if c.starts_with("latent:") => "latent",
        "pos_count" | "neg_count" | "neu_count" => "polarity",
        "entropy" => "entropy",
        "controversy" => "controversy",
        "bias" => "bias",
        "lix" | "fog" => "readability",
        "subjectivity" => "subjectivity",
        _ => "other",
    }
}

// ---------------------------------------------------------------- news regression

#[derive(Debug, Serialize, Deserialize)]
struct NewsModel {
    columns: Vec<String>,
    train: Vec<String>,
    test: Vec<String>,
    lasso: LassoModel,
    svr: SvrModel,
    forest: RandomForest,
}

impl NewsModel {
    fn regressors(&self) -> [(&'static str, &dyn Regressor); 3] {
        [("lasso", &self.lasso), ("svr", &self.svr), ("forest", &self.forest)]
    }
}

struct NewsData {
    table: FeatureTable,
    y: Vec<f64>,
}

fn news_data(ws: &Workspace, stage: &'static str) -> Result<NewsData> {
    let table = read_feature_table(ws, &ws.require(stage, ARTICLE_FEATURES, "features")?, ARTICLE_META.len(), ARTICLE_FEATURES)?;
    let y = table
        .meta
        .iter()
        .map(|m| parse_f64(&m[3], ARTICLE_FEATURES))
        .collect::<Result<_>>()?;
    Ok(NewsData { table, y })
}

fn train_news(ws: &Workspace) -> Result<()> {
    let cfg = &ws.config;
    let data = news_data(ws, "train")?;
    let t = &data.table;
    let sources: Vec<String> = t.meta.iter().map(|m| m[1].clone()).collect();
    let split = stratified_split(&sources, cfg.train.test_fraction, cfg.train.min_per_source, cfg.seed)?;
    let xtr = rows_to_array(&pick(&t.x, &split.train))?;
    let ytr = pick(&data.y, &split.train);
    let xte = rows_to_array(&pick(&t.x, &split.test))?;
    let yte = pick(&data.y, &split.test);
    let svr_cfg = crate::learn::SvrConfig {
        seed: cfg.seed,
        ..cfg.train.svr.clone()
    };
    let rf_cfg = crate::learn::ForestConfig {
        seed: cfg.seed,
        ..cfg.train.forest.clone()
    };
    let model = NewsModel {
        columns: t.columns.clone(),
        train: split.train.iter().map(|&k| t.meta[k][0].clone()).collect(),
        test: split.test.iter().map(|&k| t.meta[k][0].clone()).collect(),
        lasso: select_lambda_ebic(xtr.view(), &ytr, cfg.train.lasso_grid)?,
        svr: svr_fit(xtr.view(), &ytr, &svr_cfg)?,
        forest: rf_fit(xtr.view(), &ytr, &rf_cfg)?,
    };
    let mut records = Vec::new();
    for (name, m) in model.regressors() {
        let r = regression_metrics(&yte, &m.predict(xte.view()))?;
        for (metric, v) in [("mse", r.mse), ("rmse", r.rmse), ("smape", r.smape)] {
            records.push(MetricRecord::new(Task::NewsRegress.name(), &format!("{name}.{metric}"), v, yte.len()));
        }
    }
    let groups: Vec<String> = t.columns.iter().map(|c| feature_group(c).to_string()).collect();
    let mut imp: Vec<(&str, GroupImportance)> = lasso_group_importance(&model.lasso, &groups)?
        .into_iter()
        .map(|g| ("lasso", g))
        .collect();
    imp.extend(
        permutation_importance(&model.forest, xte.view(), &yte, &groups, cfg.seed)?
            .into_iter()
            .map(|g| ("forest_permutation", g)),
    );
    let rows: Vec<Vec<String>> = imp
        .into_iter()
        .map(|(m, g)| vec![m.to_string(), g.group, num(g.score)])
        .collect();
    let header = ["method", "group", "score"].map(String::from);
    write_table(ws, "metrics/news-regress-importance.csv", &header, &rows)?;
    write_json(ws, &Task::NewsRegress.model(), &model)?;
    write_metrics(ws, &Task::NewsRegress.metrics(), &records)
}

// ---------------------------------------------------------------- pair tasks

const MASKS: [FeatureMask; 3] = [FeatureMask::All, FeatureMask::Text, FeatureMask::Net];

#[derive(Debug, Serialize, Deserialize)]
struct MaskedSvm {
    mask: FeatureMask,
    /// Per-column divisor; columns are not centred so zero stays zero.
    scale: Vec<f64>,
    svm: SvmModel,
}

impl MaskedSvm {
    fn input(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter().zip(&self.scale).map(|(v, s)| v / s).collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PairSvmModel {
    models: Vec<MaskedSvm>,
}

fn column_scale(rows: &[Vec<f64>]) -> Vec<f64> {
    let d = rows.first().map_or(0, Vec::len);
    let n = rows.len() as f64;
    (0..d)
        .map(|k| {
            let mean = rows.iter().map(|r| r[k]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[k] - mean) * (r[k] - mean)).sum::<f64>() / n;
            if var > 1e-24 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect()
}

/// Pair feature vectors under every mask, sharing one history view per
/// prediction instant.
fn pair_vectors(history: &History, pairs: &[PairRow]) -> Result<Vec<[Vec<f64>; 3]>> {
    let mut views: BTreeMap<i64, HistoryView<'_>> = BTreeMap::new();
    pairs
        .iter()
        .map(|p| {
            let view = views.entry(p.as_of).or_insert_with(|| history.view(p.as_of));
            let f = view.pair_features(&p.user_i, &p.user_j)?;
            Ok(MASKS.map(|m| f.to_vec(m)))
        })
        .collect()
}

fn svm_label(label: u8) -> i8 {
    if label == 1 {
        1
    } else {
        -1
    }
}

/// AUC and accuracy overall and on pairs that never met before.
fn classification_records(
    task: Task,
    model: &str,
    pairs: &[&PairRow],
    scores: &[f64],
    predicted: &[u8],
) -> Result<Vec<MetricRecord>> {
    let mut out = Vec::new();
    for (suffix, keep) in [("", false), ("_new", true)] {
        let idx: Vec<usize> = (0..pairs.len()).filter(|&k| !keep || !pairs[k].met_before).collect();
        if idx.is_empty() {
            continue;
        }
        let labels: Vec<u8> = idx.iter().map(|&k| pairs[k].label).collect();
        let s: Vec<f64> = idx.iter().map(|&k| scores[k]).collect();
        let m = classification_metrics(&labels, &s, 0.5)?;
        if let Some(auc) = m.auc {
            out.push(MetricRecord::new(task.name(), &format!("{model}.auc{suffix}"), auc, idx.len()));
        } else {
            log::warn!("{model}: AUC{suffix} undefined on a single-class set");
        }
        let correct = idx.iter().filter(|&&k| predicted[k] == pairs[k].label).count();
        out.push(MetricRecord::new(
            task.name(),
            &format!("{model}.accuracy{suffix}"),
            correct as f64 / idx.len() as f64,
            idx.len(),
        ));
    }
    Ok(out)
}

fn train_pair_svm(ws: &Workspace) -> Result<()> {
    let (history, _) = load_history(ws, "train")?;
    let pairs = read_pairs(ws, "train")?;
    let vectors = pair_vectors(&history, &pairs)?;
    // development pairs only matter for early stopping, so the SVM fits on both
    let fit: Vec<usize> = (0..pairs.len()).filter(|&k| pairs[k].split != "test").collect();
    let test = split_indices(&pairs, "test");
    let y: Vec<i8> = fit.iter().map(|&k| svm_label(pairs[k].label)).collect();
    let test_pairs: Vec<&PairRow> = test.iter().map(|&k| &pairs[k]).collect();
    let mut models = Vec::new();
    let mut records = Vec::new();
    for (m, mask) in MASKS.iter().enumerate() {
        let raw: Vec<Vec<f64>> = fit.iter().map(|&k| vectors[k][m].clone()).collect();
        let scale = column_scale(&raw);
        let scaled: Vec<Vec<f64>> = raw
            .iter()
            .map(|r| r.iter().zip(&scale).map(|(v, s)| v / s).collect())
            .collect();
        let svm = svm_fit(rows_to_array(&scaled)?.view(), &y, &ws.config.train.svm, *mask)?;
        let model = MaskedSvm { mask: *mask, scale, svm };
        let (scores, predicted) = svm_outputs(&model, test.iter().map(|&k| &vectors[k][m]));
        records.extend(classification_records(Task::PairSvm, mask.name(), &test_pairs, &scores, &predicted)?);
        models.push(model);
    }
    write_json(ws, &Task::PairSvm.model(), &PairSvmModel { models })?;
    write_metrics(ws, &Task::PairSvm.metrics(), &records)
}

fn svm_outputs<'a>(model: &MaskedSvm, rows: impl Iterator<Item = &'a Vec<f64>>) -> (Vec<f64>, Vec<u8>) {
    rows.map(|r| {
        let x = model.input(r);
        (model.svm.score(&x), u8::from(model.svm.predict(&x) == 1))
    })
    .unzip()
}

fn gcn_samples(ws: &Workspace, stage: &'static str, pairs: &[PairRow]) -> Result<Vec<GcnSample>> {
    let (history, dim) = load_history(ws, stage)?;
    let cands: Vec<PairCandidate> = pairs.iter().map(PairRow::candidate).collect();
    let g = &ws.config.graph;
    pair_samples(&history, &cands, g.dis_max, g.node_cap, dim)?
        .iter()
        .map(|s| s.to_gcn_sample())
        .collect()
}

fn gcn_scores(samples: &[GcnSample], params: &GcnParams) -> Result<Vec<f64>> {
    samples
        .iter()
        .map(|s| gcn_forward(&s.a_hat, &s.x, s.i, s.j, params))
        .collect()
}

fn train_pair_gcn(ws: &Workspace) -> Result<()> {
    let pairs = read_pairs(ws, "train")?;
    let samples = gcn_samples(ws, "train", &pairs)?;
    let [train, dev, test] = ["train", "dev", "test"].map(|s| pick(&samples, &split_indices(&pairs, s)));
    let config = crate::learn::GcnConfig {
        seed: ws.config.seed,
        ..ws.config.train.gcn.clone()
    };
    let trained = gcn_train(&train, &dev, &config)?;
    let mut w = ws.create("logs/pair-gcn.csv")?;
    write_training_log(&mut w, &trained.log)?;
    w.flush().map_err(Error::Stream)?;
    write_json(ws, &Task::PairGcn.model(), &trained.params.to_checkpoint())?;

    let test_idx = split_indices(&pairs, "test");
    let test_pairs: Vec<&PairRow> = test_idx.iter().map(|&k| &pairs[k]).collect();
    let scores = gcn_scores(&test, &trained.params)?;
    let predicted: Vec<u8> = scores.iter().map(|&s| u8::from(s >= 0.5)).collect();
    let mut records = classification_records(Task::PairGcn, "gcn", &test_pairs, &scores, &predicted)?;
    if !test.is_empty() {
        let (loss, _) = gcn_evaluate(&test, &trained.params)?;
        records.push(MetricRecord::new(Task::PairGcn.name(), "gcn.loss", loss, test.len()));
    }
    records.push(MetricRecord::new(
        Task::PairGcn.name(),
        "gcn.best_epoch",
        trained.best_epoch as f64,
        train.len(),
    ));
    write_metrics(ws, &Task::PairGcn.metrics(), &records)
}

fn train_inputs(ws: &Workspace, task: Task, stage: &'static str) -> Result<Vec<(&'static str, PathBuf)>> {
    Ok(match task {
        Task::NewsRegress => vec![("article_features", ws.require(stage, ARTICLE_FEATURES, "features")?)],
        Task::PairSvm | Task::PairGcn => {
            let mut inputs = feature_inputs(ws, stage)?;
            inputs.push(("comment_features", ws.require(stage, COMMENT_FEATURES, "features")?));
            inputs.push(("pairs", ws.require(stage, PAIRS, "features")?));
            inputs
        }
    })
}

fn task_settings(ws: &Workspace, task: Task) -> serde_json::Value {
    let c = &ws.config;
    match task {
        Task::NewsRegress => json!({
            "task": task,
            "seed": c.seed,
            "test_fraction": c.train.test_fraction,
            "min_per_source": c.train.min_per_source,
            "lasso_grid": c.train.lasso_grid,
            "svr": c.train.svr,
            "forest": c.train.forest,
        }),
        Task::PairSvm => json!({
            "task": task,
            "tau": c.tau,
            "top_sources": c.graph.top_sources,
            "svm": c.train.svm,
        }),
        Task::PairGcn => json!({
            "task": task,
            "seed": c.seed,
            "tau": c.tau,
            "graph": c.graph,
            "gcn": c.train.gcn,
        }),
    }
}

/// Fit the models of `task` and report their test metrics.
pub fn train(ws: &Workspace, task: Task) -> Result<StageStatus> {
    let inputs = train_inputs(ws, task, "train")?;
    let mut outputs = vec![task.model(), task.metrics()];
    match task {
        Task::NewsRegress => outputs.push("metrics/news-regress-importance.csv".into()),
        Task::PairGcn => outputs.push("logs/pair-gcn.csv".into()),
        Task::PairSvm => {}
    }
    let outputs: Vec<&str> = outputs.iter().map(String::as_str).collect();
    ws.stage(&format!("train:{}", task.name()), &inputs, &task_settings(ws, task), &outputs, || match task {
        Task::NewsRegress => train_news(ws),
        Task::PairSvm => train_pair_svm(ws),
        Task::PairGcn => train_pair_gcn(ws),
    })
}

// ---------------------------------------------------------------- predict

fn pair_prefix(p: &PairRow) -> Vec<String> {
    vec![
        p.user_i.clone(),
        p.user_j.clone(),
        p.as_of.to_string(),
        p.label.to_string(),
        p.met_before.to_string(),
    ]
}

const PAIR_PREFIX: [&str; 5] = ["user_i", "user_j", "as_of", "label", "met_before"];

fn predict_news(ws: &Workspace) -> Result<()> {
    let model: NewsModel = read_json(ws, &ws.require("predict", &Task::NewsRegress.model(), "train --task news-regress")?)?;
    let data = news_data(ws, "predict")?;
    if data.table.columns != model.columns {
        return Err(Error::Config("article features changed since training; rerun `train`".into()));
    }
    let index: HashMap<&str, usize> = data.table.meta.iter().enumerate().map(|(k, m)| (m[0].as_str(), k)).collect();
    let mut header: Vec<String> = ["article_id", "source", "y_true"].map(String::from).to_vec();
    header.extend(model.regressors().iter().map(|(n, _)| n.to_string()));
    let mut rows = Vec::new();
    for id in &model.test {
        let &k = index.get(id.as_str()).ok_or_else(|| Error::Config(format!("article {id} no longer has features; rerun `train`")))?;
        let mut row = vec![id.clone(), data.table.meta[k][1].clone(), num(data.y[k])];
        row.extend(model.regressors().iter().map(|(_, m)| num(m.predict_row(&data.table.x[k]))));
        rows.push(row);
    }
    write_table(ws, &Task::NewsRegress.predictions(), &header, &rows)
}

fn predict_pair_svm(ws: &Workspace) -> Result<()> {
    let model: PairSvmModel = read_json(ws, &ws.require("predict", &Task::PairSvm.model(), "train --task pair-svm")?)?;
    let (history, _) = load_history(ws, "predict")?;
    let pairs: Vec<PairRow> = read_pairs(ws, "predict")?.into_iter().filter(|p| p.split == "test").collect();
    let vectors = pair_vectors(&history, &pairs)?;
    let mut header: Vec<String> = PAIR_PREFIX.map(String::from).to_vec();
    let mut columns = Vec::new();
    for m in &model.models {
        let k = MASKS.iter().position(|x| *x == m.mask).expect("known mask");
        header.push(format!("{}_score", m.mask.name()));
        header.push(format!("{}_pred", m.mask.name()));
        columns.push(svm_outputs(m, vectors.iter().map(|v| &v[k])));
    }
    let rows: Vec<Vec<String>> = pairs
        .iter()
        .enumerate()
        .map(|(r, p)| {
            let mut row = pair_prefix(p);
            for (s, pred) in &columns {
                row.push(num(s[r]));
                row.push(pred[r].to_string());
            }
            row
        })
        .collect();
    write_table(ws, &Task::PairSvm.predictions(), &header, &rows)
}

fn predict_pair_gcn(ws: &Workspace) -> Result<()> {
    let ckpt: GcnCheckpoint = read_json(ws, &ws.require("predict", &Task::PairGcn.model(), "train --task pair-gcn")?)?;
    let params = GcnParams::from_checkpoint(&ckpt)?;
    let pairs: Vec<PairRow> = read_pairs(ws, "predict")?.into_iter().filter(|p| p.split == "test").collect();
    let samples = gcn_samples(ws, "predict", &pairs)?;
    let scores = gcn_scores(&samples, &params)?;
    let mut header: Vec<String> = PAIR_PREFIX.map(String::from).to_vec();
    header.extend(["gcn_score".to_string(), "gcn_pred".to_string()]);
    let rows: Vec<Vec<String>> = pairs
        .iter()
        .zip(&scores)
        .map(|(p, &s)| {
            let mut row = pair_prefix(p);
            row.push(num(s));
            row.push(u8::from(s >= 0.5).to_string());
            row
        })
        .collect();
    write_table(ws, &Task::PairGcn.predictions(), &header, &rows)
}

/// Score the held-out items of `task` with its trained models.
pub fn predict(ws: &Workspace, task: Task) -> Result<StageStatus> {
    let mut inputs = train_inputs(ws, task, "predict")?;
    let by = match task {
        Task::NewsRegress => "train --task news-regress",
        Task::PairSvm => "train --task pair-svm",
        Task::PairGcn => "train --task pair-gcn",
    };
    inputs.push(("model", ws.require("predict", &task.model(), by)?));
    let out = task.predictions();
    ws.stage(&format!("predict:{}", task.name()), &inputs, &task_settings(ws, task), &[&out], || match task {
        Task::NewsRegress => predict_news(ws),
        Task::PairSvm => predict_pair_svm(ws),
        Task::PairGcn => predict_pair_gcn(ws),
    })
}

// ---------------------------------------------------------------- eval

fn eval_news(t: &FeatureTable, records: &mut Vec<MetricRecord>) -> Result<()> {
    let y: Vec<f64> = t.meta.iter().map(|m| parse_f64(&m[2], "predictions")).collect::<Result<_>>()?;
    for (c, name) in t.columns.iter().enumerate() {
        let pred: Vec<f64> = t.x.iter().map(|r| r[c]).collect();
        let r = regression_metrics(&y, &pred)?;
        for (metric, v) in [("mse", r.mse), ("rmse", r.rmse), ("smape", r.smape)] {
            records.push(MetricRecord::new(Task::NewsRegress.name(), &format!("{name}.{metric}"), v, y.len()));
        }
    }
    Ok(())
}

fn eval_pairs(task: Task, t: &FeatureTable, records: &mut Vec<MetricRecord>) -> Result<()> {
    let labels: Vec<u8> = t
        .meta
        .iter()
        .map(|m| {
            m[3].parse().map_err(|_| Error::Malformed {
                what: "predictions",
                detail: format!("bad label `{}`", m[3]),
            })
        })
        .collect::<Result<_>>()?;
    let new: Vec<bool> = t.meta.iter().map(|m| m[4] == "false").collect();
    let pairs: Vec<PairRow> = t
        .meta
        .iter()
        .zip(&labels)
        .zip(&new)
        .map(|((m, &label), &n)| PairRow {
            user_i: m[0].clone(),
            user_j: m[1].clone(),
            as_of: m[2].parse().unwrap_or_default(),
            label,
            met_before: !n,
            split: "test".into(),
        })
        .collect();
    let refs: Vec<&PairRow> = pairs.iter().collect();
    for c in (0..t.columns.len()).step_by(2) {
        let model = t.columns[c].trim_end_matches("_score");
        let scores: Vec<f64> = t.x.iter().map(|r| r[c]).collect();
        let predicted: Vec<u8> = t.x.iter().map(|r| u8::from(r[c + 1] == 1.0)).collect();
        records.extend(classification_records(task, model, &refs, &scores, &predicted)?);
        // one ranked list per prediction instant
        let mut lists: BTreeMap<i64, Vec<(f64, bool)>> = BTreeMap::new();
        for (p, s) in pairs.iter().zip(&scores) {
            lists.entry(p.as_of).or_default().push((*s, p.label == 1));
        }
        let lists: Vec<RankedList> = lists.into_values().map(RankedList::from_scores).collect();
        match ranking_metrics(&lists) {
            Ok(r) => {
                let used = r.lists - r.skipped;
                records.push(MetricRecord::new(task.name(), &format!("{model}.map"), r.map, used));
                records.push(MetricRecord::new(task.name(), &format!("{model}.mrr"), r.mrr, used));
            }
            Err(Error::EmptyInput(_)) => log::warn!("{model}: no ranked list with a conflict"),
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

/// Metrics of the stored predictions of `task`.
pub fn eval(ws: &Workspace, task: Task) -> Result<StageStatus> {
    let pred = task.predictions();
    let by = match task {
        Task::NewsRegress => "predict --task news-regress",
        Task::PairSvm => "predict --task pair-svm",
        Task::PairGcn => "predict --task pair-gcn",
    };
    let inputs = vec![("predictions", ws.require("eval", &pred, by)?)];
    let out = format!("metrics/eval-{}.json", task.name());
    ws.stage(&format!("eval:{}", task.name()), &inputs, &json!({ "task": task }), &[&out], || {
        let path = ws.artifact(&pred);
        let n_meta = match task {
            Task::NewsRegress => 3,
            _ => PAIR_PREFIX.len(),
        };
        let t = read_feature_table(ws, &path, n_meta, "predictions")?;
        let mut records = Vec::new();
        match task {
            Task::NewsRegress => eval_news(&t, &mut records)?,
            _ => eval_pairs(task, &t, &mut records)?,
        }
        write_metrics(ws, &out, &records)
    })
}

// ---------------------------------------------------------------- analyze

fn analyze_sources(ws: &Workspace) -> Result<()> {
    let news: Vec<NewsConflictRow> = read_csv(ws, &ws.require("analyze", NEWS_CONFLICT, "conflict")?)?;
    let points: Vec<(String, i64, f64)> = news.into_iter().map(|n| (n.source, n.posted_utc, n.nc)).collect();
    let series = source_conflict_series(&points, ws.config.graph.series_window)?;
    let mut w = ws.create("analysis/sources.csv")?;
    write_series_csv(&mut w, &series)?;
    w.flush().map_err(Error::Stream)?;
    write_csv(ws, "analysis/sources_stats.csv", &["source", "max", "min", "mean", "n"], &series.stats)
}

fn analyze_depth(ws: &Workspace) -> Result<()> {
    let engagements = read_engagements(ws, "analyze")?;
    let profile = depth_conflict_profile(engagements.iter().map(|e| {
        let cf = crate::conflict::ConflictScore {
            value: e.score.cf,
            common_terms: e.score.common_terms,
        };
        (e.inter.depth, normalize_by_common(cf))
    }));
    let mut w = ws.create("analysis/depth.csv")?;
    write_depth_csv(&mut w, &profile)?;
    w.flush().map_err(Error::Stream)?;
    Ok(())
}

fn analyze_clusters(ws: &Workspace) -> Result<()> {
    let events = scored(&read_engagements(ws, "analyze")?);
    let graph = build_graph(&events)?;
    let step = ws.config.graph.snapshot_step;
    let mut reports = Vec::new();
    if let (Some(t0), Some(t1)) = (events.iter().map(|e| e.time).min(), events.iter().map(|e| e.time).max()) {
        let start = (t0.div_euclid(step) + 1) * step;
        let count = ((t1 - start).div_euclid(step) + 2).max(1) as usize;
        for snap in graph.snapshots(start, step, count)? {
            reports.push(cluster_report(&snap, ws.config.tau, ws.config.graph.majority, ws.config.seed));
        }
    }
    let mut w = ws.create("analysis/clusters.csv")?;
    write_clusters_csv(&mut w, &reports)?;
    w.flush().map_err(Error::Stream)?;
    Ok(())
}

#[derive(Serialize)]
struct StateRow {
    state: u8,
    name: &'static str,
    pairs: u64,
}

fn analyze_states(ws: &Workspace) -> Result<()> {
    let events = scored(&read_engagements(ws, "analyze")?);
    let mut users = BTreeSet::new();
    let mut by_pair: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    for e in events.iter().filter(|e| e.user_a != e.user_b) {
        users.insert(e.user_a.as_str());
        users.insert(e.user_b.as_str());
        let key = if e.user_a < e.user_b {
            (e.user_a.as_str(), e.user_b.as_str())
        } else {
            (e.user_b.as_str(), e.user_a.as_str())
        };
        by_pair.entry(key).or_default().push(e.cf);
    }
    let mut counts: BTreeMap<PairState, u64> = BTreeMap::new();
    for cfs in by_pair.values() {
        *counts.entry(pair_state(cfs, ws.config.tau)?).or_default() += 1;
    }
    let n = users.len() as u64;
    counts.insert(PairState::None, n * n.saturating_sub(1) / 2 - by_pair.len() as u64);
    let rows: Vec<StateRow> = [
        (PairState::None, "none"),
        (PairState::Peaceful, "peaceful"),
        (PairState::Conflicting, "conflicting"),
        (PairState::Mixed, "mixed"),
    ]
    .into_iter()
    .map(|(s, name)| StateRow {
        state: s.code(),
        name,
        pairs: counts.get(&s).copied().unwrap_or(0),
    })
    .collect();
    write_csv(ws, "analysis/states.csv", &["state", "name", "pairs"], &rows)
}

/// Plot-data exports over the conflict scores and the engagement graph.
pub fn analyze(ws: &Workspace, task: AnalyzeTask) -> Result<StageStatus> {
    let inputs = match task {
        AnalyzeTask::Sources => vec![("news_conflict", ws.require("analyze", NEWS_CONFLICT, "conflict")?)],
        _ => vec![
            ("interactions", ws.require("analyze", INTERACTIONS, "ingest")?),
            ("scores", ws.require("analyze", SCORES, "conflict")?),
        ],
    };
    let outputs: Vec<String> = match task {
        AnalyzeTask::Sources => vec!["analysis/sources.csv".into(), "analysis/sources_stats.csv".into()],
        t => vec![format!("analysis/{}.csv", t.name())],
    };
    let outputs: Vec<&str> = outputs.iter().map(String::as_str).collect();
    let settings = json!({ "task": task, "tau": ws.config.tau, "seed": ws.config.seed, "graph": ws.config.graph });
    ws.stage(&format!("analyze:{}", task.name()), &inputs, &settings, &outputs, || match task {
        AnalyzeTask::Sources => analyze_sources(ws),
        AnalyzeTask::Depth => analyze_depth(ws),
        AnalyzeTask::Clusters => analyze_clusters(ws),
        AnalyzeTask::States => analyze_states(ws),
    })
}

/// Every stage in order.
pub fn run_all(ws: &Workspace) -> Result<()> {
    ingest(ws)?;
    terms(ws)?;
    sentiment(ws)?;
    conflict(ws)?;
    features(ws)?;
    for task in Task::ALL {
        train(ws, task)?;
        predict(ws, task)?;
        eval(ws, task)?;
    }
    for task in AnalyzeTask::ALL {
        analyze(ws, task)?;
    }
    Ok(())
}
