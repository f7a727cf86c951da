mod common;

use std::fs;

use common::mini::{data_dir, run_cli};

fn stdout(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn rerun_is_up_to_date() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_cli(dir.path(), &["all"]).status.success());
    let again = run_cli(dir.path(), &["all"]);
    assert!(again.status.success());
    let text = stdout(&again);
    for stage in ["ingest", "terms", "sentiment", "conflict", "features", "train:pair-gcn", "analyze:states"] {
        assert!(text.contains(&format!("{stage}: up to date")), "{stage} reran:\n{text}");
    }
}

#[test]
fn changed_tau_reruns_downstream_only() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_cli(dir.path(), &["all"]).status.success());
    let o = run_cli(dir.path(), &["--tau", "2", "conflict"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!stdout(&o).contains("conflict: up to date"));
    let o = run_cli(dir.path(), &["--tau", "2", "terms"]);
    assert!(stdout(&o).contains("terms: up to date"));
}

#[test]
fn missing_stage_input_names_the_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_cli(dir.path(), &["terms"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("tagged.jsonl") && err.contains("ingest"), "{err}");
}

#[test]
fn missing_embeddings_is_a_user_error() {
    let dir = tempfile::tempdir().unwrap();
    let toml = fs::read_to_string(data_dir().join("conflictforge.toml"))
        .unwrap()
        .replace("resources/embeddings.txt", "resources/absent.txt");
    assert!(toml.contains("absent.txt"));
    let config = dir.path().join("run.toml");
    fs::write(&config, toml).unwrap();
    let o = std::process::Command::new(env!("CARGO_BIN_EXE_conflictforge"))
        .arg("--config")
        .arg(&config)
        .arg("--data-dir")
        .arg(data_dir())
        .arg("--out-dir")
        .arg(dir.path().join("out"))
        .arg("all")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.txt"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "sed = 3\n").unwrap();
    let o = std::process::Command::new(env!("CARGO_BIN_EXE_conflictforge"))
        .arg("--config")
        .arg(&config)
        .arg("ingest")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn seed_fixes_training() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = run_cli(d.path(), &["--seed", "3", "all"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["metrics/pair-gcn.json", "metrics/pair-svm.json", "metrics/news-regress.json", "models/pair-gcn.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn metrics_records_have_the_documented_shape() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_cli(dir.path(), &["all"]).status.success());
    let text = fs::read_to_string(dir.path().join("metrics/eval-pair-svm.json")).unwrap();
    let records: Vec<serde_json::Map<String, serde_json::Value>> = serde_json::from_str(&text).unwrap();
    assert!(!records.is_empty());
    for r in records {
        let mut keys: Vec<&str> = r.keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(keys, ["metric", "n", "task", "value"]);
    }
}
