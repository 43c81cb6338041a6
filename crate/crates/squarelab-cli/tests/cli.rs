//! End-to-end tests of the squarelab binary: subcommand grammar, output
//! schemas, exit codes, the ledger, and the export paths.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_squarelab")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(binary())
        .args(args)
        .current_dir(dir)
        .env("SQUARELAB_LEDGER", dir.join("runs.jsonl"))
        .output()
        .expect("binary runs")
}

fn stdout_json(output: &Output) -> Value {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("stdout is one JSON object")
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .display()
        .to_string()
}

#[test]
fn chi_two_leaf_example() {
    let dir = TempDir::new().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "chi",
            "--tree",
            &fixture("two_leaf.json"),
            "--set",
            "leaves=0",
            "--mode",
            "both",
        ],
    );
    let json = stdout_json(&out);
    assert_eq!(json["coeffs"], serde_json::json!(["0/1", "1/8", "3/8", "0/1"]));
    assert_eq!(json["oracle_match"], Value::Bool(true));
    assert_eq!(json["pv"], "1/2");
    assert_eq!(json["mode"], "martingale");
}

#[test]
fn chi_root_excluded_two_leaf_is_zero() {
    let dir = TempDir::new().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "chi",
            "--tree",
            &fixture("two_leaf.json"),
            "--set",
            "leaves=0",
            "--include-root",
            "false",
        ],
    );
    let json = stdout_json(&out);
    assert_eq!(json["coeffs"], serde_json::json!(["0/1", "0/1", "0/1", "0/1"]));
    assert_eq!(json["oracle_match"], Value::Bool(true));
}

#[test]
fn chi_wavelet_system_example() {
    let dir = TempDir::new().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "chi",
            "--system",
            "N=2;intervals=0:0,1:0",
            "--set",
            "N=2;cells=0",
        ],
    );
    let json = stdout_json(&out);
    assert_eq!(json["coeffs"], serde_json::json!(["0/1", "0/1", "3/32", "0/1"]));
    assert_eq!(json["oracle_match"], Value::Bool(true));
    assert_eq!(json["pv"], "1/4");
    assert_eq!(json["mode"], "wavelet");
}

#[test]
fn shift_first_quarter_cell() {
    let dir = TempDir::new().unwrap();
    let json = stdout_json(&run_in(dir.path(), &["shift", "--set", "N=2;mask=0x1"]));
    assert_eq!(json["inside"]["exact"], "0/1");
    assert_eq!(json["total"]["exact"], "1/8");
    assert_eq!(json["pairing"]["exact"], "0/1");
    assert_eq!(json["measure"], "1/4");
}

#[test]
fn tensor_antidiagonal_pair() {
    let dir = TempDir::new().unwrap();
    let json = stdout_json(&run_in(
        dir.path(),
        &["tensor", "--set", "N=2;mask2d=0x104"],
    ));
    assert_eq!(json["inside"]["exact"], "1/128");
    assert_eq!(json["pairing"]["exact"], "-1/32");
}

#[test]
fn verify_martingale_suite_passes() {
    let dir = TempDir::new().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "verify",
            "--suite",
            "martingale",
            "--depth",
            "4",
            "--trials",
            "10",
            "--seed",
            "7",
        ],
    );
    let json = stdout_json(&out);
    assert_eq!(json["passed"], Value::Bool(true));
    assert!(json["checks"].as_array().unwrap().len() >= 5);
    assert!(out.status.code() == Some(0));
}

#[test]
fn eta_writes_report_file() {
    let dir = TempDir::new().unwrap();
    let report_path = dir.path().join("report.json");
    let out = run_in(
        dir.path(),
        &[
            "eta",
            "--objective",
            "mart-eta",
            "--resolution",
            "1",
            "--out",
            report_path.to_str().unwrap(),
        ],
    );
    let json = stdout_json(&out);
    assert_eq!(json["best_ratio"]["exact"], "1/2");
    assert_eq!(json["recertified"], Value::Bool(true));
    let file: Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(file["best_mask"], json["best_mask"]);
}

#[test]
fn wavelet_chi_and_sq_ops() {
    let dir = TempDir::new().unwrap();
    let chi = stdout_json(&run_in(
        dir.path(),
        &[
            "wavelet", "--filter", "haar", "--set", "N=2;cells=0", "--grid", "4", "--trials",
            "200", "--seed", "11", "--p", "1.0",
        ],
    ));
    assert_eq!(chi["stderr"], 0.0);
    assert_eq!(chi["generator"], "chacha8");

    let sq = stdout_json(&run_in(
        dir.path(),
        &[
            "wavelet", "--filter", "db4", "--set", "N=1;cells=0", "--grid", "7", "--op", "sq",
        ],
    ));
    assert!(sq["sq_ratio"].as_f64().unwrap() > 0.0);
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let unknown_flag = run_in(dir.path(), &["shift", "--bogus", "1"]);
    assert_eq!(unknown_flag.status.code(), Some(2));
    assert!(!unknown_flag.stderr.is_empty());

    let bad_spec = run_in(dir.path(), &["shift", "--set", "cells=1"]);
    assert_eq!(bad_spec.status.code(), Some(2));

    let missing_subcommand = run_in(dir.path(), &[]);
    assert_eq!(missing_subcommand.status.code(), Some(2));

    let empty_set = run_in(dir.path(), &["shift", "--set", "N=2;mask=0x0"]);
    assert_eq!(empty_set.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&empty_set.stderr).contains("empty set"));
}

#[test]
fn ledger_records_have_the_documented_shape() {
    let dir = TempDir::new().unwrap();
    run_in(dir.path(), &["shift", "--set", "N=2;mask=0x1"]);
    run_in(
        dir.path(),
        &["eta", "--objective", "mart-eta", "--resolution", "2"],
    );
    let ledger = std::fs::read_to_string(dir.path().join("runs.jsonl")).unwrap();
    let lines: Vec<&str> = ledger.lines().collect();
    assert_eq!(lines.len(), 2);
    for line in &lines {
        let record: Value = serde_json::from_str(line).unwrap();
        for key in ["id", "timestamp", "subcommand", "params", "results", "version"] {
            assert!(record.get(key).is_some(), "missing {key}");
        }
    }
    let eta: Value = serde_json::from_str(lines[1]).unwrap();
    assert_eq!(eta["results"]["best_ratio"]["exact"], "3/8");
    assert!(eta["results"]["best_mask"]["float"].is_null());
}

#[test]
fn export_empty_ledger_yields_header_only() {
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), &["export", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.trim(),
        "id,timestamp,subcommand,objective,resolution,seed,result_name,exact,float"
    );
}

#[test]
fn export_csv_rows_per_result() {
    let dir = TempDir::new().unwrap();
    run_in(
        dir.path(),
        &["eta", "--objective", "mart-eta", "--resolution", "2"],
    );
    let out = run_in(dir.path(), &["export", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    // header + best_mask, best_ratio, recertified, visited
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().any(|r| r.contains("best_ratio,3/8,0.375")));
    assert!(rows.iter().any(|r| r.contains(",mart-eta,2,")));
}

#[test]
fn export_json_round_trips_the_records() {
    let dir = TempDir::new().unwrap();
    run_in(dir.path(), &["shift", "--set", "N=2;mask=0x3"]);
    run_in(dir.path(), &["tensor", "--set", "N=1;mask2d=0x9"]);
    let out = run_in(dir.path(), &["export", "--format", "json"]);
    let exported: Value = serde_json::from_slice(&out.stdout).unwrap();

    let ledger = std::fs::read_to_string(dir.path().join("runs.jsonl")).unwrap();
    let original: Vec<Value> = ledger
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(exported, Value::Array(original));
}

#[test]
fn export_skips_corrupt_lines_with_warning() {
    let dir = TempDir::new().unwrap();
    for _ in 0..3 {
        run_in(dir.path(), &["shift", "--set", "N=2;mask=0x1"]);
    }
    let path = dir.path().join("runs.jsonl");
    let mut ledger = std::fs::read_to_string(&path).unwrap();
    ledger.push_str("{not json at all\n");
    std::fs::write(&path, ledger).unwrap();

    let out = run_in(dir.path(), &["export", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("warning:"), "stderr: {stderr}");
    assert!(stderr.contains("exported 3 records, 1 warnings"));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = TempDir::new().unwrap();
    let config_path = dir.path().join("lab.conf");
    std::fs::write(&config_path, "# search defaults\nobjective = mart-eta\nresolution = 1\n")
        .unwrap();
    let from_config = stdout_json(&run_in(
        dir.path(),
        &["--config", config_path.to_str().unwrap(), "eta"],
    ));
    assert_eq!(from_config["resolution"], 1);
    assert_eq!(from_config["objective"], "mart-eta");

    let overridden = stdout_json(&run_in(
        dir.path(),
        &[
            "--config",
            config_path.to_str().unwrap(),
            "eta",
            "--resolution",
            "2",
        ],
    ));
    assert_eq!(overridden["resolution"], 2);
    assert_eq!(overridden["best_ratio"]["exact"], "3/8");
}

#[test]
fn stdout_is_byte_identical_across_reruns() {
    let dir = TempDir::new().unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["verify", "--suite", "numeric", "--trials", "5", "--seed", "3"],
        vec!["chi", "--system", "N=2;intervals=0:0,1:0", "--set", "N=2;cells=0"],
        vec!["eta", "--objective", "shift-ratio", "--resolution", "2"],
        vec![
            "eta",
            "--objective",
            "mart-eta",
            "--resolution",
            "3",
            "--mode",
            "anneal",
            "--iters",
            "100",
            "--seed",
            "42",
        ],
        vec!["shift", "--set", "N=3;mask=0x2d"],
        vec![
            "wavelet", "--filter", "db6", "--set", "N=2;cells=1,2", "--grid", "5", "--trials",
            "150", "--seed", "5",
        ],
    ];
    for args in &commands {
        let first = run_in(dir.path(), args);
        let second = run_in(dir.path(), args);
        assert_eq!(
            first.stdout, second.stdout,
            "stdout differs for {args:?}"
        );
        assert!(first.status.success());
    }
}
