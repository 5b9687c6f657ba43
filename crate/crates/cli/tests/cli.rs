use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fitplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fitplan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    all.extend(["--out", dir.to_str().unwrap()]);
    fitplan(&all)
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn plan_wall_gap_writes_result_and_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &["plan", "--scenario", "wall-gap", "--dim", "2", "--planner", "fit-sl", "--budget", "0.2"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let result: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("result.json")).unwrap()).unwrap();
    assert_eq!(result["success"], true);
    assert!(result["final_cost"].as_f64().unwrap() < 0.7);
    assert!(!csv_rows(&tmp.path().join("trace.csv")).is_empty());
}

#[test]
fn plan_with_zero_budget_reports_no_solution() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["plan", "--budget", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let result: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("result.json")).unwrap()).unwrap();
    assert_eq!(result["success"], false);
    assert!(result["final_cost"].is_null());
}

#[test]
fn invalid_settings_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run_in(tmp.path(), &["plan", "--eta", "0.9"]).status.code(), Some(1));
    assert_eq!(run_in(tmp.path(), &["plan", "--batch", "0"]).status.code(), Some(1));
    assert_eq!(run_in(tmp.path(), &["plan", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(
        run_in(tmp.path(), &["plan", "--config", "/nonexistent/config.json"]).status.code(),
        Some(1)
    );
    assert!(!tmp.path().join("result.json").exists());
}

#[test]
fn bench_rejects_bad_planner_lists_before_running() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["bench", "--planner", "fit-sl", "--planner", "fit-x"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fit-x"));
    assert_eq!(run_in(tmp.path(), &["bench"]).status.code(), Some(1));
    assert!(!tmp.path().join("results.csv").exists());
}

#[test]
fn bench_writes_outputs_and_reruns_identically_from_manifest() {
    let first = tempfile::tempdir().unwrap();
    let args = [
        "bench", "--planner", "fit-sl", "--planner", "fixed", "--planner", "rrt-connect", "--seeds", "3",
        "--iterations", "8", "--jobs", "2", "--master-seed", "7",
    ];
    let out = run_in(first.path(), &args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let results = csv_rows(&first.path().join("results.csv"));
    assert_eq!(results.len(), 9);
    let summary = csv_rows(&first.path().join("summary.csv"));
    assert_eq!(summary.len(), 3);
    assert_eq!(fs::read_dir(first.path().join("traces")).unwrap().count(), 9);

    let manifest_path = first.path().join("manifest.json");
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(&manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 7);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["library_version"].is_string());
    assert_eq!(manifest["config"]["settings"]["fit"]["eta"], 1.1);

    let second = tempfile::tempdir().unwrap();
    let out = run_in(second.path(), &["bench", "--config", manifest_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rerun = csv_rows(&second.path().join("results.csv"));
    // everything but the timing column must match
    let strip = |rows: &[Vec<String>]| -> Vec<Vec<String>> {
        rows.iter()
            .map(|r| r.iter().enumerate().filter(|(i, _)| *i != 5).map(|(_, v)| v.clone()).collect())
            .collect()
    };
    assert_eq!(strip(&results), strip(&rerun));
    let again: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(second.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(again["config_sha256"], manifest["config_sha256"]);
}

#[test]
fn decay_table_matches_endpoints() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["decay-table"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&tmp.path().join("decay_table.csv"));
    assert_eq!(rows.len(), 5 * 101);
    let find = |s: &str, xi: &str| rows.iter().find(|r| r[0] == s && r[1] == xi).unwrap().clone();
    assert_eq!(find("fit-sl", "1.00")[3], "199");
    assert_eq!(find("fit-l", "0.25")[2].parse::<f64>().unwrap(), 0.25);
    for s in ["fit-l", "fit-p", "fit-b", "fit-i"] {
        let row = find(s, "0.00");
        assert_eq!(row[2].parse::<f64>().unwrap(), 0.0);
        assert_eq!(row[3], "1");
    }
}

#[test]
fn decay_table_rejects_fixed() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run_in(tmp.path(), &["decay-table", "--strategy", "fixed"]).status.code(), Some(1));
}

#[test]
fn generated_environment_round_trips_through_plan() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["gen-env", "--scenario", "random-rectangles", "--env-seed", "4", "--budget", "1.0"]);
    assert_eq!(out.status.code(), Some(0));
    let path = tmp.path().join("random-rectangles-2d-s4.json");
    let before = fs::read_to_string(&path).unwrap();

    let plan_dir = tmp.path().join("plan");
    let out = run_in(&plan_dir, &["plan", "--scenario", path.to_str().unwrap(), "--iterations", "30"]);
    assert!(matches!(out.status.code(), Some(0) | Some(2)));
    assert!(plan_dir.join("result.json").exists());
    // inputs are never touched
    assert_eq!(fs::read_to_string(&path).unwrap(), before);
}
