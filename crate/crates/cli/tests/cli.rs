use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn orbispec(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbispec"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&out.stdout));
    })
}

fn emit(dir: &TempDir, name: &str) -> PathBuf {
    let out = orbispec(dir.path(), &["catalog", "--emit", name]);
    assert!(out.status.success());
    let path = dir.path().join(format!("{name}.json"));
    std::fs::write(&path, &out.stdout).unwrap();
    path
}

#[test]
fn compare_pillow_and_square() {
    let dir = tempfile::tempdir().unwrap();
    emit(&dir, "pillow");
    emit(&dir, "square");
    let base = ["compare", "--a", "pillow.json", "--b", "square.json"];

    let out = orbispec(dir.path(), &[&base[..], &["--p", "1", "--max-norm2", "4"]].concat());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["result"], "equal");

    let out = orbispec(dir.path(), &[&base[..], &["--p", "0", "--max-norm2", "1"]].concat());
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["result"], "first_difference");
    assert_eq!(v["mu2"], "1");
    assert_eq!((v["a"].as_u64(), v["b"].as_u64()), (Some(1), Some(2)));
}

#[test]
fn validation_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = r#"{"dimension":2,"gram":[["1","0"],["0","2"]],
        "generators":[{"matrix":[[0,-1],[1,0]],"translation":["0","0"]}]}"#;
    std::fs::write(dir.path().join("bad.json"), bad).unwrap();
    let out = orbispec(dir.path(), &["validate", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    let v = stdout_json(&out);
    assert_eq!(v["error"], "NotOrthogonal");
    assert_eq!(v["file"], "bad.json");
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    std::fs::write(dir.path().join("cut.json"), "{\"dimension\": 2, \"gram\": [").unwrap();
    let out = orbispec(dir.path(), &["validate", "cut.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["error"], "SchemaError");

    let out = orbispec(dir.path(), &["validate", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["error"], "Io");
}

#[test]
fn validate_reports_order() {
    let dir = tempfile::tempdir().unwrap();
    emit(&dir, "triangular-orbifold");
    let out = orbispec(dir.path(), &["validate", "triangular-orbifold.json"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["valid"], true);
    assert_eq!(v["dimension"], 3);
    assert_eq!(v["order"], 3);
}

#[test]
fn spectrum_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    emit(&dir, "pillow");
    let out = orbispec(
        dir.path(),
        &["spectrum", "--group", "pillow.json", "--p", "0", "--max-norm2", "1", "--format", "csv"],
    );
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "mu2,multiplicity\n0,1\n1,1\n");

    let out = orbispec(dir.path(), &["spectrum", "--group", "pillow.json", "--p", "0", "--max-norm2", "1"]);
    let v = stdout_json(&out);
    assert_eq!(v["bound"], "1");
    assert_eq!(v["entries"].as_array().unwrap().len(), 2);
}

#[test]
fn strata_and_heat() {
    let dir = tempfile::tempdir().unwrap();
    emit(&dir, "pillow");
    let out = orbispec(dir.path(), &["strata", "--group", "pillow.json"]);
    let v = stdout_json(&out);
    let mut orders: Vec<u64> = v["strata"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["isotropy_order"].as_u64().unwrap())
        .collect();
    orders.sort_unstable();
    assert_eq!(orders, [2, 4, 4]);

    let out = orbispec(dir.path(), &["heat", "--group", "pillow.json", "--p", "0"]);
    let v = stdout_json(&out);
    let terms = v["expansion"]["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 2);
    assert_eq!(v["manifold_test"]["verdict"], "JointSpectrumMargin");
    assert_eq!(v["parity"]["plus"]["k_epsilon"], 2);
}

#[test]
fn trace_check_samples() {
    let dir = tempfile::tempdir().unwrap();
    emit(&dir, "O1-d2");
    let out = orbispec(
        dir.path(),
        &["trace-check", "--group", "O1-d2.json", "--p", "1", "--t", "0.1", "0.05"],
    );
    assert!(out.status.success());
    let v = stdout_json(&out);
    let samples = v.as_array().unwrap();
    assert_eq!(samples.len(), 2);
    assert_eq!(samples[0]["t"].as_f64(), Some(0.1));
    for s in samples {
        let value = s["value"].as_f64().unwrap();
        let expansion = s["expansion_value"].as_f64().unwrap();
        assert_eq!(s["residual"].as_f64(), Some((value - expansion).abs()));
        assert!(s["tail_estimate"].as_f64().unwrap() < 1e-12);
    }
    let residual = |i: usize| samples[i]["residual"].as_f64().unwrap();
    assert!(residual(1) < residual(0) / 5.0);

    let out = orbispec(
        dir.path(),
        &["trace-check", "--group", "O1-d2.json", "--p", "0", "--t", "-1"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn krawtchouk_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = orbispec(dir.path(), &["krawtchouk", "--d", "4", "--p", "1"]);
    let v = stdout_json(&out);
    assert_eq!(v["values"], serde_json::json!([4, 2, 0, -2, -4]));
    assert_eq!(v["zeros"], serde_json::json!([2]));

    let out = orbispec(dir.path(), &["krawtchouk", "--d", "9", "--p", "2", "--k", "3"]);
    let v = stdout_json(&out);
    assert_eq!(v["value"], 0);
    assert_eq!(v["reflection_trace"], 0);

    let out = orbispec(dir.path(), &["krawtchouk", "--d", "3", "--p", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn catalog_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = orbispec(dir.path(), &["catalog", "--list"]);
    let names: Vec<String> = stdout_json(&out)
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["name"].as_str().unwrap().to_string())
        .collect();
    assert!(names.iter().any(|n| n == "pillow"));
    assert!(names.iter().any(|n| n == "M6-d9"));

    let out = orbispec(dir.path(), &["catalog", "--verify", "pillow"]);
    assert!(out.status.success());
    assert!(stdout_json(&out).as_array().unwrap().iter().all(|r| r["passed"] == true));

    let out = orbispec(dir.path(), &["catalog", "--emit", "no-such-thing"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["error"], "UnknownCatalogEntry");

    let out = orbispec(dir.path(), &["catalog"]);
    assert!(!out.status.success());
}

#[test]
fn emitted_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = emit(&dir, "O2-d4");
    let out = orbispec(dir.path(), &["catalog", "--emit", "O2-d4"]);
    assert_eq!(std::fs::read(path).unwrap(), out.stdout);
    let out = orbispec(dir.path(), &["validate", "O2-d4.json"]);
    assert_eq!(stdout_json(&out)["order"], 2);
}
