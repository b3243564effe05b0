//! End-to-end runs of the `wpan` binary: exit codes and output files.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn wpan(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wpan"))
        .args(args)
        .current_dir(dir)
        .env_remove("WPAN_OUT_DIR")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

/// Generates a small tree scenario into `dir/tree.json`.
fn tree_scenario(dir: &Path) -> String {
    let out = wpan(&["gen-scenario", "--kind", "tree", "--seed", "2", "--out", "tree.json"], dir);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    "tree.json".into()
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&wpan(&["analyze", "--bogus"], tmp.path())), 1);
    assert_eq!(code(&wpan(&[], tmp.path())), 1);
}

#[test]
fn help_exits_cleanly() {
    let tmp = TempDir::new().unwrap();
    let out = wpan(&["--help"], tmp.path());
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("gen-scenario"));
}

#[test]
fn missing_scenario_file_is_an_error() {
    let tmp = TempDir::new().unwrap();
    let out = wpan(&["analyze", "--scenario", "nope.json"], tmp.path());
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.json"));
}

#[test]
fn malformed_qos_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&wpan(&["design", "--qos", "p=0.01,dmax=3"], tmp.path())), 1);
}

#[test]
fn analyze_writes_three_tables() {
    let tmp = TempDir::new().unwrap();
    let scenario = tree_scenario(tmp.path());
    let out = wpan(
        &["analyze", "--scenario", &scenario, "--lambda-list", "0.5,1,2", "--out-dir", "res"],
        tmp.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let res = tmp.path().join("res");
    let (header, rows) = read_csv(&res.join("analysis_summary.csv"));
    assert_eq!(header[0], "lambda_pps");
    assert_eq!(rows.len(), 3);
    let (_, sources) = read_csv(&res.join("analysis_sources.csv"));
    assert_eq!(sources.len(), 3 * 9);
    let (_, nodes) = read_csv(&res.join("analysis_nodes.csv"));
    assert_eq!(nodes.len(), 3 * 9);
}

#[test]
fn out_dir_comes_from_the_environment() {
    let tmp = TempDir::new().unwrap();
    let scenario = tree_scenario(tmp.path());
    let out = Command::new(env!("CARGO_BIN_EXE_wpan"))
        .args(["analyze", "--scenario", &scenario])
        .current_dir(tmp.path())
        .env("WPAN_OUT_DIR", "from-env")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(tmp.path().join("from-env/analysis_nodes.csv").exists());
}

#[test]
fn exhausted_iterations_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    let scenario = tree_scenario(tmp.path());
    let path = tmp.path().join(&scenario);
    let mut json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    json["analysis"] = serde_json::json!({ "max_iterations": 1 });
    fs::write(&path, json.to_string()).unwrap();
    let out = wpan(&["analyze", "--scenario", &scenario, "--out-dir", "res"], tmp.path());
    assert_eq!(code(&out), 2);
    let (_, rows) = read_csv(&tmp.path().join("res/analysis_summary.csv"));
    assert_eq!(rows[0][2], "false");
}

#[test]
fn teff_models_are_ordered_row_by_row() {
    let tmp = TempDir::new().unwrap();
    let scenario = tree_scenario(tmp.path());
    for (model, dir) in [("mdinf", "md"), ("boorstyn", "bo")] {
        let out = wpan(
            &[
                "analyze",
                "--scenario",
                &scenario,
                "--lambda-list",
                "1,4,8",
                "--teff-model",
                model,
                "--out-dir",
                dir,
            ],
            tmp.path(),
        );
        assert_eq!(code(&out), 0);
    }
    let (header, md) = read_csv(&tmp.path().join("md/analysis_nodes.csv"));
    let (_, bo) = read_csv(&tmp.path().join("bo/analysis_nodes.csv"));
    let col = header.iter().position(|h| h == "teff_ms").unwrap();
    assert_eq!(md.len(), bo.len());
    for (a, b) in md.iter().zip(&bo) {
        if a[col].is_empty() {
            continue;
        }
        let (a, b): (f64, f64) = (a[col].parse().unwrap(), b[col].parse().unwrap());
        assert!(a >= b - 1e-12, "M/D/inf {a} below product form {b}");
    }
}

#[test]
fn isolated_node_rate_sweep() {
    let tmp = TempDir::new().unwrap();
    let out = wpan(
        &["gen-scenario", "--kind", "line", "--nodes", "1", "--per", "0", "--out", "one.json"],
        tmp.path(),
    );
    assert_eq!(code(&out), 0);
    let out = wpan(
        &["analyze", "--scenario", "one.json", "--lambda-list", "0.1,1,10", "--out-dir", "res"],
        tmp.path(),
    );
    assert_eq!(code(&out), 0);
    let (header, rows) = read_csv(&tmp.path().join("res/analysis_nodes.csv"));
    let alpha = header.iter().position(|h| h == "alpha").unwrap();
    let q = header.iter().position(|h| h == "q").unwrap();
    let node = header.iter().position(|h| h == "node").unwrap();
    let source_rows: Vec<_> = rows.iter().filter(|r| r[node] != "0").collect();
    assert_eq!(source_rows.len(), 3);
    let mut last_q = 0.0;
    for r in source_rows {
        assert_eq!(r[alpha].parse::<f64>().unwrap(), 0.0);
        let q: f64 = r[q].parse().unwrap();
        assert!(q > last_q);
        last_q = q;
    }
}

#[test]
fn compare_reports_bands_and_gates_on_tolerances() {
    let tmp = TempDir::new().unwrap();
    let scenario = tree_scenario(tmp.path());
    let out = wpan(
        &[
            "compare",
            "--scenario",
            &scenario,
            "--lambda-list",
            "1",
            "--duration-s",
            "40",
            "--warmup-s",
            "5",
            "--reps",
            "2",
            "--out-dir",
            "res",
        ],
        tmp.path(),
    );
    assert!(matches!(code(&out), 0 | 3), "{}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(code(&out) == 3, stderr.contains("violation"));
    let (header, rows) = read_csv(&tmp.path().join("res/compare.csv"));
    assert_eq!(
        header,
        ["lambda_pps", "metric", "id", "analysis", "simulation", "simulation_ci", "rel_error", "band"]
    );
    let band = header.iter().position(|h| h == "band").unwrap();
    assert!(rows
        .iter()
        .all(|r| ["", "✓", "+", "++", "−", "−−"].contains(&r[band].as_str())));
}

#[test]
fn design_writes_trace_and_tree() {
    let tmp = TempDir::new().unwrap();
    let out = wpan(&["design", "--seed", "4", "--payload-bytes", "70", "--out-dir", "res"], tmp.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&tmp.path().join("res/design_trace.csv"));
    assert_eq!(header[0], "iteration");
    assert!(!rows.is_empty());
    let tree = tmp.path().join("res/design_tree.json");
    let out = wpan(
        &["analyze", "--scenario", tree.to_str().unwrap(), "--out-dir", "again"],
        tmp.path(),
    );
    assert_eq!(code(&out), 0);
}
