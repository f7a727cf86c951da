//! Runs the CLI on the bundled mini-corpus and diffs outputs against the
//! committed goldens. Set `CONFLICTFORGE_BLESS=1` to rewrite the goldens.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mini")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/mini")
}

/// `conflictforge --config data/mini/conflictforge.toml --out-dir <out> <args>`
pub fn run_cli(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conflictforge"))
        .arg("--config")
        .arg(data_dir().join("conflictforge.toml"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .env_remove("CONFLICTFORGE_DATA_DIR")
        .env("RUST_LOG", "error")
        .output()
        .expect("spawn conflictforge")
}

// Fitted models are large; their hashes sit in manifest.json instead.
fn compared(rel: &Path) -> bool {
    !rel.starts_with("models")
}

fn files(root: &Path) -> Vec<PathBuf> {
    fn walk(root: &Path, dir: &Path, acc: &mut Vec<PathBuf>) {
        let Ok(entries) = fs::read_dir(dir) else { return };
        for e in entries.flatten() {
            let p = e.path();
            if p.is_dir() {
                walk(root, &p, acc);
            } else {
                acc.push(p.strip_prefix(root).expect("under root").to_path_buf());
            }
        }
    }
    let mut acc = Vec::new();
    walk(root, root, &mut acc);
    acc.retain(|p| compared(p));
    acc.sort();
    acc
}

/// Differences between `out` and the goldens, empty when identical.
pub fn golden_diff(out: &Path) -> Vec<String> {
    let golden = golden_dir();
    let produced = files(out);
    if std::env::var_os("CONFLICTFORGE_BLESS").is_some() {
        let _ = fs::remove_dir_all(&golden);
        for rel in &produced {
            let dst = golden.join(rel);
            fs::create_dir_all(dst.parent().expect("has parent")).expect("create golden dir");
            fs::copy(out.join(rel), dst).expect("bless golden");
        }
    }
    let expected = files(&golden);
    let mut diffs = Vec::new();
    for rel in &expected {
        if !produced.contains(rel) {
            diffs.push(format!("missing {}", rel.display()));
        } else if fs::read(out.join(rel)).ok() != fs::read(golden.join(rel)).ok() {
            diffs.push(format!("differs {}", rel.display()));
        }
    }
    for rel in &produced {
        if !expected.contains(rel) {
            diffs.push(format!("unexpected {}", rel.display()));
        }
    }
    if expected.is_empty() {
        diffs.push(format!("no goldens under {}", golden.display()));
    }
    diffs
}
