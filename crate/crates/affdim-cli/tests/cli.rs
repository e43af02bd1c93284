//! End-to-end tests of the binary: envelope shape, determinism, exit
//! codes, and side-table placement.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_affdim"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn parse_stdout(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config(name: &str) -> String {
    configs_dir().join(name).to_string_lossy().into_owned()
}

#[test]
fn benchmark_run_reports_two_clusters_and_exact_entropy() {
    let out = run(&[
        "example-8-1",
        "--no-timestamp",
        "--trials",
        "30",
        "--max-n",
        "400",
    ]);
    let doc = parse_stdout(&out);
    let result = &doc["result"];

    let entropy = result["entropy"].as_f64().unwrap();
    assert!((entropy - 0.5 * 2f64.ln()).abs() < 1e-12);

    let clusters = result["clusters"].as_array().unwrap();
    assert_eq!(clusters.len(), 2, "two exponent clusters");

    // At n = 400 every path has exactly 201 of 400 symbols in the heavier
    // class, so both extremes have closed forms.
    let lo = 201.0 * 2f64.ln() / (400.0 * 5f64.ln());
    let hi = 201.0 * 2f64.ln() / (400.0 * 2.5f64.ln());
    assert!((result["s_lower"].as_f64().unwrap() - lo).abs() < 1e-9);
    assert!((result["s_bar"].as_f64().unwrap() - hi).abs() < 1e-9);

    assert_eq!(doc["schema"].as_str().unwrap(), "affdim-result/1");
    assert_eq!(doc["command"].as_str().unwrap(), "example-8-1");
    assert!(doc.get("timestamp_unix").is_none());
}

#[test]
fn identical_runs_are_byte_identical_and_seeds_matter() {
    let args = [
        "example-8-1",
        "--no-timestamp",
        "--trials",
        "10",
        "--max-n",
        "200",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout, "same args, same bytes");

    let mut seeded = args.to_vec();
    seeded.extend_from_slice(&["--seed", "1"]);
    let c = run(&seeded);
    assert_ne!(a.stdout, c.stdout, "a different seed changes the records");
}

#[test]
fn timestamps_appear_unless_suppressed() {
    let out = run(&["example-8-1", "--trials", "5", "--max-n", "100"]);
    let doc = parse_stdout(&out);
    assert!(doc["timestamp_unix"].as_u64().is_some());
}

#[test]
fn invalid_configs_exit_one_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();

    let cases = [
        (
            "expanding.json",
            r#"{"matrices": [[[1.5, 0.0], [0.0, 0.5]], [[0.3, 0.0], [0.0, 0.3]]]}"#,
            "matrices[0]",
        ),
        (
            "bad-measure.json",
            r#"{"matrices": [[[0.3, 0.0], [0.0, 0.3]], [[0.2, 0.0], [0.0, 0.2]]],
                "measure": {"type": "bernoulli", "p": [0.7, 0.7]}}"#,
            "measure.p",
        ),
        (
            "unknown-field.json",
            r#"{"matrices": [[[0.3, 0.0], [0.0, 0.3]], [[0.2, 0.0], [0.0, 0.2]]],
                "matrix_count": 2}"#,
            "matrix_count",
        ),
    ];
    for (name, text, needle) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        let out = run(&["affinity-dim", "--config", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "case {name}");
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(
            stderr.contains(needle),
            "case {name}: stderr should name `{needle}`, got: {stderr}"
        );
    }
}

#[test]
fn budget_exhaustion_exits_two() {
    let out = bin()
        .args(["example-8-1", "--trials", "200", "--max-n", "2000"])
        .env("AFFDIM_BUDGET", "10")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("resource limit"), "got: {stderr}");
}

#[test]
fn missing_config_exits_one() {
    let out = run(&["affinity-dim"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));
}

#[test]
fn side_tables_land_next_to_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("spectrum.json");
    let out = run(&[
        "s-spectrum",
        "--config",
        &config("alternating-antidiagonal.json"),
        "--no-timestamp",
        "--trials",
        "10",
        "--max-n",
        "200",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty(), "result goes to the file, not stdout");
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(doc["result"]["profile"]["samples"].as_u64(), Some(10));

    let csv_path = dir.path().join("spectrum.records.csv");
    let csv = std::fs::read_to_string(&csv_path).expect("records side table exists");
    assert!(csv.starts_with("sample_index,s,oscillation,zero_mass\n"));
    assert_eq!(csv.lines().count(), 11, "header plus one row per sample");
}

#[test]
fn affinity_dim_matches_the_equal_ratio_value() {
    let out = run(&[
        "affinity-dim",
        "--config",
        &config("sierpinski-thirds.json"),
        "--no-timestamp",
    ]);
    let doc = parse_stdout(&out);
    let est = &doc["result"]["affinity_dim"];
    assert!((est["value"].as_f64().unwrap() - 1.0).abs() < 1e-4);
    let bracket = est["bracket"].as_array().unwrap();
    assert!(bracket[0].as_f64().unwrap() <= est["value"].as_f64().unwrap());
    assert!(bracket[1].as_f64().unwrap() >= est["value"].as_f64().unwrap());
    assert!(est["estimator"]["schedule"].as_array().is_some());
}

#[test]
fn criteria_reports_the_antidiagonal_ratios() {
    let out = run(&[
        "criteria",
        "--config",
        &config("alternating-antidiagonal.json"),
        "--no-timestamp",
    ]);
    let doc = parse_stdout(&out);
    let reports = doc["result"]["reports"].as_array().unwrap();
    let anti = reports
        .iter()
        .find(|r| r["criterion"] == "antidiagonal-nonexact")
        .expect("antidiagonal report present");
    assert_eq!(anti["verdict"].as_str().unwrap(), "holds");
    let mut ratios: Vec<f64> = anti["evidence"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["name"].as_str().unwrap().starts_with("ratio_"))
        .map(|e| e["value"].as_f64().unwrap())
        .collect();
    ratios.sort_by(f64::total_cmp);
    assert_eq!(ratios, vec![0.5, 2.0, 2.0]);
}

#[test]
fn thread_count_does_not_change_results() {
    let base = [
        "s-spectrum",
        "--config",
        &config("alternating-antidiagonal.json"),
        "--no-timestamp",
        "--trials",
        "8",
        "--max-n",
        "200",
    ];
    let mut one = base.to_vec();
    one.extend_from_slice(&["--threads", "1"]);
    let mut four = base.to_vec();
    four.extend_from_slice(&["--threads", "4"]);
    let a = run(&one);
    let b = run(&four);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}
