use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn mvk(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvk"))
        .args(args)
        .current_dir(dir)
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("abc.json"),
        r#"{"classifiers":[
            {"id":"A","accuracy":0.9,"time":1.0},
            {"id":"B","accuracy":0.8,"time":2.0},
            {"id":"C","accuracy":0.7,"time":3.0}
        ]}"#,
    )
    .unwrap();
    let big: Vec<String> = (0..26)
        .map(|i| format!(r#"{{"id":"x{i}","accuracy":0.7,"time":1}}"#))
        .collect();
    std::fs::write(dir.path().join("big.json"), format!(r#"{{"classifiers":[{}]}}"#, big.join(","))).unwrap();
    dir
}

#[test]
fn evaluate_reports_majority_accuracy() {
    let dir = workspace();
    let out = mvk(dir.path(), &["evaluate", "--pool", "abc.json", "--subset", "A,B,C", "--scheme", "classical"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema_version"], "1");
    assert!((v["accuracy"].as_f64().unwrap() - 0.902).abs() < 1e-12);
    assert_eq!(v["total_time"], 6.0);
}

#[test]
fn solve_writes_to_out_only() {
    let dir = workspace();
    let out = mvk(
        dir.path(),
        &["solve", "--pool", "abc.json", "--budget", "3", "--scheme", "classical", "--method", "exhaustive", "--out", "r.json"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    for key in ["best", "accuracy", "total_time", "method", "evaluations"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["best"], serde_json::json!(["A"]));
}

#[test]
fn infeasible_solve_exits_3_with_report() {
    let dir = workspace();
    let out = mvk(
        dir.path(),
        &["solve", "--pool", "abc.json", "--budget", "0.5", "--scheme", "classical", "--method", "exhaustive"],
    );
    assert_eq!(code(&out), 3);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["infeasible"], true);
    assert_eq!(v["best"], serde_json::json!([]));
}

#[test]
fn oversized_exhaustive_search_exits_4() {
    let dir = workspace();
    let out = mvk(
        dir.path(),
        &["solve", "--pool", "big.json", "--budget", "5", "--scheme", "classical", "--method", "exhaustive"],
    );
    assert_eq!(code(&out), 4);
    assert!(out.stdout.is_empty());
    assert!(stderr(&out).contains("size limit"));
}

#[test]
fn usage_and_validation_errors_exit_2() {
    let dir = workspace();
    std::fs::write(dir.path().join("broken.json"), "{\"classifiers\": [\n  {\"id\": \"A\",}\n]}").unwrap();
    std::fs::write(
        dir.path().join("dup.json"),
        r#"{"classifiers":[{"id":"A","accuracy":0.9,"time":1},{"id":"A","accuracy":0.8,"time":1}]}"#,
    )
    .unwrap();
    let cases: &[(&[&str], &str)] = &[
        (&["solve", "--pool", "abc.json", "--budget", "3", "--scheme", "classical", "--method", "stochastic"], "--seed"),
        (&["simulate", "--pool", "abc.json", "--d", "3"], "--seed"),
        (&["pnk", "--n", "4", "--d", "3", "--method", "mc"], "--seed"),
        (&["evaluate", "--pool", "abc.json", "--subset", "A", "--scheme", "majority"], "cdf:beta"),
        (&["evaluate", "--pool", "abc.json", "--subset", "A", "--scheme", "cdf:beta:0:1"], "Beta"),
        (&["evaluate", "--pool", "abc.json", "--subset", "Z", "--scheme", "classical"], "\"Z\""),
        (&["evaluate", "--pool", "broken.json", "--subset", "A", "--scheme", "classical"], "line 2"),
        (&["evaluate", "--pool", "dup.json", "--subset", "A", "--scheme", "classical"], "\"A\""),
        (&["evaluate", "--pool", "missing.json", "--subset", "A", "--scheme", "classical"], "missing.json"),
        (&["theory", "--cdf", "arcsine", "--mu", "1.5", "--n", "3"], "mean accuracy"),
        (&["pnk", "--n", "3", "--d", "1"], "class count"),
        (&["solve", "--pool", "abc.json", "--budget", "3", "--scheme", "classical", "--method", "stochastic", "--seed", "1", "--stop", "sometimes"], "improve"),
        (&["--workers", "0", "theory", "--cdf", "arcsine", "--mu", "0.5", "--n", "3"], "workers"),
        (&["frobnicate"], "frobnicate"),
    ];
    for (args, needle) in cases {
        let out = mvk(dir.path(), args);
        assert_eq!(code(&out), 2, "{args:?}: {}", stderr(&out));
        assert!(out.stdout.is_empty(), "{args:?} wrote to stdout");
        assert!(stderr(&out).contains(needle), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn unwritable_output_names_path() {
    let dir = workspace();
    let out = mvk(
        dir.path(),
        &["theory", "--cdf", "arcsine", "--mu", "0.5", "--n", "3", "--out", "no/such/dir/t.json"],
    );
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("no/such/dir/t.json"));
}

#[test]
fn pnk_formula_table_csv() {
    let dir = workspace();
    let out = mvk(dir.path(), &["pnk", "--n", "3", "--d", "3", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,d,k,method,model,exact,value,std_error,trials");
    assert_eq!(lines.len(), 5);
    assert!(lines[2].starts_with("3,3,1,formula,,2/9,"));
}

#[test]
fn experiment_metadata_records_workers() {
    let dir = workspace();
    std::fs::write(
        dir.path().join("spec.json"),
        r#"{"kind":"pnk_compare","seed":1,"trials":1000,"n":[2],"d":[3]}"#,
    )
    .unwrap();
    let out = mvk(dir.path(), &["--workers", "2", "experiment", "--spec", "spec.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["metadata"]["workers"], 2);
    assert_eq!(v["metadata"]["seed"], 1);
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);

    std::fs::write(dir.path().join("typo.json"), r#"{"kind":"pnk_compare","seed":1,"trails":1000,"n":[2],"d":[3]}"#)
        .unwrap();
    let out = mvk(dir.path(), &["experiment", "--spec", "typo.json"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("trails"));
}

#[test]
fn seeded_runs_are_byte_identical_across_worker_counts() {
    let dir = workspace();
    let args = ["pnk", "--n", "4", "--d", "3", "--method", "mc", "--trials", "40000", "--seed", "11"];
    let runs: Vec<Vec<u8>> = ["1", "4"]
        .iter()
        .map(|w| {
            let mut full = vec!["--workers", w];
            full.extend(args);
            mvk(dir.path(), &full).stdout
        })
        .collect();
    assert!(!runs[0].is_empty());
    assert_eq!(runs[0], runs[1]);
}
