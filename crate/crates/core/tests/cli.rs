//! End-to-end runs of the `depinn` binary: exit codes, the JSON document
//! and artifact files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn depinn(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_depinn")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn document(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs")
}

#[test]
fn fd_prints_schema_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = depinn(&["fd", "--k", "1", "--method", "continuation"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = document(&out);
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["verb"], "fd");
    assert_eq!(doc["config"]["model"]["kind"], "standard_fk");
    assert_eq!(doc["config"]["command"]["method"], "continuation");
    let f_d = doc["result"]["F_d"].as_f64().unwrap();
    assert!((f_d - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-5);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0, "no files without --output-dir");
}

#[test]
fn output_dir_receives_requested_formats() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = depinn(
        &["disc", "--force", "0.001", "--output-dir", out_dir.to_str().unwrap(), "--format", "json,svg", "--jobs", "2"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("disc.json").exists());
    assert!(out_dir.join("disc.svg").exists());
    assert!(!out_dir.join("disc.csv").exists());
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("disc.json")).unwrap()).unwrap();
    assert_eq!(saved, document(&out));
    assert_eq!(saved["config"]["output"]["jobs"], 2);
}

#[test]
fn parse_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(depinn(&["fd", "--p", "half"], dir.path()).status.code(), Some(2));
    assert_eq!(depinn(&["no-such-verb"], dir.path()).status.code(), Some(2));
    assert_eq!(depinn(&["fd", "--model", "unknown"], dir.path()).status.code(), Some(2));
    assert_eq!(depinn(&["scan", "--f-step", "0"], dir.path()).status.code(), Some(2));
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[command]\nverb = \"fd\"\nbogus = 1\n").unwrap();
    assert_eq!(depinn(&["run", bad.to_str().unwrap()], dir.path()).status.code(), Some(2));
}

#[test]
fn invalid_models_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = depinn(&["fd", "--model", "double_well", "--b", "0.5"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let out = depinn(&["fd", "--k", "-1"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn numerical_failures_exit_4_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("fail");
    // Above F_d(0/1) there is no pinned state to build a discommensuration on.
    let out = depinn(&["disc", "--force", "0.5", "--output-dir", out_dir.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(4));
    let doc = document(&out);
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["error"]["exit_code"], 4);
    assert_eq!(doc["config"]["command"]["force"], 0.5);
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("error.json")).unwrap()).unwrap();
    assert_eq!(saved, doc);
}

#[test]
fn run_executes_a_shipped_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("glue.toml");
    let out = depinn(&["run", cfg.to_str().unwrap(), "--format", "csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = document(&out);
    assert_eq!(doc["verb"], "glue");
    assert_eq!(doc["result"]["glue"]["bound_holds"], true);
    assert!(dir.path().join("out/glue/glue.csv").exists());
    assert!(!dir.path().join("out/glue/glue.json").exists());
}

#[test]
fn every_shipped_config_parses() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        if let Err(e) = depinn::cli::RunConfig::from_toml(&text) {
            panic!("{}: {e}", path.display());
        }
    }
}
