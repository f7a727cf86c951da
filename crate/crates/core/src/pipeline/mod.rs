//! Stage orchestration behind the command line: configuration, artifact
//! layout and the fingerprint manifest that makes reruns no-ops.

mod stages;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{DAY_SECONDS, DEFAULT_DIS_MAX, DEFAULT_NODE_CAP};
use crate::learn::{ForestConfig, GcnConfig, NegativeSampling, SvmConfig, SvrConfig};

pub use stages::{
    analyze, eval, features, ingest, predict, run_all, sentiment, terms, train, AnalyzeTask, Task,
};
pub use stages::{conflict, pair_candidates};

pub const ENV_DATA_DIR: &str = "CONFLICTFORGE_DATA_DIR";
const MANIFEST: &str = "manifest.json";
const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub comments: PathBuf,
    pub articles: PathBuf,
    pub threads: PathBuf,
    pub pretagged: Option<PathBuf>,
    pub td_scores: Option<PathBuf>,
    pub min_thread_comments: usize,
}

impl Default for InputConfig {
    fn default() -> Self {
        InputConfig {
            comments: "comments.jsonl".into(),
            articles: "articles.jsonl".into(),
            threads: "threads.jsonl".into(),
            pretagged: None,
            td_scores: None,
            min_thread_comments: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourceConfig {
    /// Replaces the bundled English list.
    pub stopwords: Option<PathBuf>,
    /// Extra names for the person gazetteer, one per line.
    pub persons: Option<PathBuf>,
    pub polarity: PathBuf,
    pub controversy: PathBuf,
    pub bias: PathBuf,
    pub subjectivity: PathBuf,
    /// Enables the latent-semantic block when set.
    pub embeddings: Option<PathBuf>,
}

impl Default for ResourceConfig {
    fn default() -> Self {
        ResourceConfig {
            stopwords: None,
            persons: None,
            polarity: "resources/polarity.tsv".into(),
            controversy: "resources/controversy.txt".into(),
            bias: "resources/bias.txt".into(),
            subjectivity: "resources/subjectivity.tsv".into(),
            embeddings: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub dis_max: usize,
    pub node_cap: usize,
    /// Spacing of graph snapshots and prediction instants, in seconds.
    pub snapshot_step: i64,
    /// Width of the per-source series windows, in seconds.
    pub series_window: i64,
    pub majority: f64,
    /// Number of most frequent sources with their own flag and common-source slot.
    pub top_sources: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            dis_max: DEFAULT_DIS_MAX,
            node_cap: DEFAULT_NODE_CAP,
            snapshot_step: DAY_SECONDS,
            series_window: 7 * DAY_SECONDS,
            majority: crate::graph::DEFAULT_MAJORITY,
            top_sources: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub test_fraction: f64,
    pub dev_fraction: f64,
    pub min_per_source: usize,
    pub lasso_grid: usize,
    pub horizon: i64,
    pub negatives: NegativeSampling,
    pub pairs_per_snapshot: Option<usize>,
    pub svr: SvrConfig,
    pub forest: ForestConfig,
    pub svm: SvmConfig,
    pub gcn: GcnConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            test_fraction: 0.2,
            dev_fraction: 0.15,
            min_per_source: 2,
            lasso_grid: 50,
            horizon: DAY_SECONDS,
            negatives: NegativeSampling::Engaged,
            pairs_per_snapshot: None,
            svr: SvrConfig::default(),
            forest: ForestConfig::default(),
            svm: SvmConfig::default(),
            gcn: GcnConfig::default(),
        }
    }
}

/// Everything a run needs. Relative input paths resolve against the data
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    pub tau: f64,
    pub input: InputConfig,
    pub resources: ResourceConfig,
    pub graph: GraphConfig,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data_dir: None,
            out_dir: None,
            seed: 0,
            tau: crate::conflict::DEFAULT_TAU,
            input: InputConfig::default(),
            resources: ResourceConfig::default(),
            graph: GraphConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    fn validate(&self) -> Result<()> {
        if !(self.tau >= 0.0) {
            return Err(Error::Config(format!("tau {} must be >= 0", self.tau)));
        }
        if self.graph.snapshot_step <= 0 || self.graph.series_window <= 0 {
            return Err(Error::Config("snapshot_step and series_window must be positive".into()));
        }
        if self.graph.dis_max == 0 || self.graph.node_cap < 2 {
            return Err(Error::Config("dis_max must be >= 1 and node_cap >= 2".into()));
        }
        Ok(())
    }
}

/// Overrides taken from the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub data_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tau: Option<f64>,
    /// Rerun stages even when their fingerprint is unchanged.
    pub force: bool,
}

/// Whether a stage did work.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageStatus {
    Ran,
    UpToDate,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    stages: BTreeMap<String, StageRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StageRecord {
    fingerprint: String,
    outputs: BTreeMap<String, String>,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Resolved directories plus the effective configuration.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub config: RunConfig,
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub force: bool,
}

impl Workspace {
    /// Data directory precedence: `--data-dir`, the config's `data_dir`
    /// (relative to the config file), `CONFLICTFORGE_DATA_DIR`, the config
    /// file's directory, the working directory.
    pub fn open(o: &Overrides) -> Result<Self> {
        let (mut config, config_dir) = match &o.config {
            Some(p) => (
                RunConfig::read(p)?,
                Some(p.parent().map(Path::to_path_buf).unwrap_or_default()),
            ),
            None => (RunConfig::default(), None),
        };
        if let Some(s) = o.seed {
            config.seed = s;
        }
        if let Some(t) = o.tau {
            config.tau = t;
        }
        config.validate()?;
        let relative = |p: &Path| match &config_dir {
            Some(d) if p.is_relative() => d.join(p),
            _ => p.to_path_buf(),
        };
        let data_dir = if let Some(d) = &o.data_dir {
            d.clone()
        } else if let Some(d) = &config.data_dir {
            relative(d)
        } else if let Some(d) = std::env::var_os(ENV_DATA_DIR) {
            PathBuf::from(d)
        } else if let Some(d) = &config_dir {
            d.clone()
        } else {
            PathBuf::from(".")
        };
        let out_dir = match (&o.out_dir, &config.out_dir) {
            (Some(d), _) => d.clone(),
            (None, Some(d)) => relative(d),
            (None, None) => PathBuf::from("out"),
        };
        Ok(Workspace {
            config,
            data_dir,
            out_dir,
            force: o.force,
        })
    }

    pub fn with_config(config: RunConfig, data_dir: PathBuf, out_dir: PathBuf) -> Result<Self> {
        config.validate()?;
        Ok(Workspace {
            config,
            data_dir,
            out_dir,
            force: false,
        })
    }

    /// Path of a user-supplied input, which must exist.
    pub fn input(&self, rel: &Path, what: &str) -> Result<PathBuf> {
        let p = self.data_dir.join(rel);
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::Config(format!("{what} file {} not found", p.display())))
        }
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Output of an earlier stage, which must exist.
    pub(crate) fn require(&self, stage: &'static str, name: &str, producer: &'static str) -> Result<PathBuf> {
        let p = self.artifact(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::MissingArtifact {
                stage,
                artifact: name.to_string(),
                producer,
            })
        }
    }

    pub(crate) fn open_read(&self, path: &Path) -> Result<BufReader<File>> {
        File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
    }

    pub(crate) fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let p = self.artifact(name);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        File::create(&p).map(BufWriter::new).map_err(|e| Error::io(&p, e))
    }

    fn load_manifest(&self) -> Manifest {
        let p = self.artifact(MANIFEST);
        fs::read(&p)
            .ok()
            .and_then(|b| serde_json::from_slice::<Manifest>(&b).ok())
            .filter(|m| m.version == MANIFEST_VERSION)
            .unwrap_or(Manifest {
                version: MANIFEST_VERSION,
                stages: BTreeMap::new(),
            })
    }

    fn save_manifest(&self, m: &Manifest) -> Result<()> {
        let mut w = self.create(MANIFEST)?;
        serde_json::to_writer_pretty(&mut w, m)?;
        w.write_all(b"\n").map_err(Error::Stream)?;
        w.flush().map_err(Error::Stream)?;
        Ok(())
    }

    /// Run `body` unless the stage's inputs, settings and outputs are
    /// unchanged since its last run. `inputs` are `(label, path)` pairs;
    /// labels rather than paths enter the fingerprint so that it does not
    /// depend on where the data lives.
    pub(crate) fn stage<S, F>(
        &self,
        name: &str,
        inputs: &[(&str, PathBuf)],
        settings: &S,
        outputs: &[&str],
        body: F,
    ) -> Result<StageStatus>
    where
        S: Serialize,
        F: FnOnce() -> Result<()>,
    {
        let mut h = Sha256::new();
        h.update(name.as_bytes());
        h.update(serde_json::to_vec(settings)?);
        for (label, path) in inputs {
            h.update(label.as_bytes());
            h.update(sha256_file(path)?.as_bytes());
        }
        let fingerprint = hex(&h.finalize());
        let mut manifest = self.load_manifest();
        if !self.force {
            if let Some(rec) = manifest.stages.get(name) {
                let intact = rec.fingerprint == fingerprint
                    && outputs.len() == rec.outputs.len()
                    && outputs.iter().all(|o| {
                        let p = self.artifact(o);
                        rec.outputs.get(*o).is_some_and(|want| sha256_file(&p).ok().as_ref() == Some(want))
                    });
                if intact {
                    println!("{name}: up to date");
                    return Ok(StageStatus::UpToDate);
                }
            }
        }
        fs::create_dir_all(&self.out_dir).map_err(|e| Error::io(&self.out_dir, e))?;
        body()?;
        let mut hashes = BTreeMap::new();
        for o in outputs {
            hashes.insert(o.to_string(), sha256_file(&self.artifact(o))?);
        }
        manifest.stages.insert(
            name.to_string(),
            StageRecord {
                fingerprint,
                outputs: hashes,
            },
        );
        self.save_manifest(&manifest)?;
        println!("{name}: wrote {}", outputs.join(", "));
        Ok(StageStatus::Ran)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_toml_keeps_defaults() {
        let c = RunConfig::from_toml("seed = 7\n[train.gcn]\nlr = 0.01\n[graph]\ndis_max = 1\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.train.gcn.lr, 0.01);
        assert_eq!(c.train.gcn.patience, 5);
        assert_eq!(c.graph.dis_max, 1);
        assert_eq!(c.graph.node_cap, DEFAULT_NODE_CAP);
        assert!(RunConfig::from_toml("sed = 1").is_err());
    }

    #[test]
    fn missing_input_is_a_user_error() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::with_config(RunConfig::default(), dir.path().into(), dir.path().join("out")).unwrap();
        let err = ws.input(Path::new("nope.jsonl"), "comments").unwrap_err();
        assert!(err.is_user_error());
        let err = ws.require("terms", "tagged.jsonl", "ingest").unwrap_err();
        assert!(err.is_user_error());
        assert!(err.to_string().contains("run `ingest` first"));
    }

    #[test]
    fn unchanged_stage_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.txt");
        fs::write(&input, "a").unwrap();
        let ws = Workspace::with_config(RunConfig::default(), dir.path().into(), dir.path().join("out")).unwrap();
        let run = |ws: &Workspace| {
            ws.stage("copy", &[("in", input.clone())], &1, &["copy.txt"], || {
                fs::write(ws.artifact("copy.txt"), fs::read(&input).unwrap()).unwrap();
                Ok(())
            })
            .unwrap()
        };
        assert_eq!(run(&ws), StageStatus::Ran);
        assert_eq!(run(&ws), StageStatus::UpToDate);
        fs::write(&input, "b").unwrap();
        assert_eq!(run(&ws), StageStatus::Ran);
        fs::write(ws.artifact("copy.txt"), "tampered").unwrap();
        assert_eq!(run(&ws), StageStatus::Ran);
    }
}
