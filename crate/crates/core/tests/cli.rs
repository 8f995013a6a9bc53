use std::f64::consts::PI;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bundlelift")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON report on stdout")
}

#[test]
fn passing_scenario_exits_zero() {
    let out = run(&["scenario", "homotopy_lift_sphere", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["schema"], "1");
    assert_eq!(r["overall"], true);
    assert!(r["checks"].as_array().unwrap().len() >= 4);
    assert!(r.get("wall_time_s").is_none());
    assert_eq!(r["config"]["seed"], 42);
    assert_eq!(r["config"]["transport_steps"], 1024);
}

#[test]
fn timestamp_is_present_by_default() {
    let out = run(&["scenario", "grassmann_action"]);
    assert!(report(&out)["wall_time_s"].is_number());
}

#[test]
fn verdict_failure_exits_one() {
    // A tolerance far below round-off makes the exact checks fail.
    let out = run(&["scenario", "grassmann_action", "--tol-exact", "1e-300", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["overall"], false);
}

#[test]
fn errors_exit_two() {
    let out = run(&["scenario", "unknown_name"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown scenario"));
    assert_eq!(run(&["scenario", "torus_sweep", "--steps", "4"]).status.code(), Some(2));
    assert_eq!(run(&["scenario", "torus_sweep", "--n", "9"]).status.code(), Some(2));
    assert_eq!(run(&["scenario", "frame_view", "--n", "2"]).status.code(), Some(2));
    assert_eq!(run(&["scenario", "frame_view", "--mesh", "1"]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    let bad_threads = Command::new(env!("CARGO_BIN_EXE_bundlelift"))
        .args(["scenario", "frame_view"])
        .env("BUNDLELIFT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(2));
}

#[test]
fn config_file_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"seed": 3, "colour": "red"}"#).unwrap();
    let out = run(&["scenario", "frame_view", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let good = dir.path().join("good.json");
    std::fs::write(&good, r#"{"seed": 3, "samples": 10}"#).unwrap();
    let out = run(&["scenario", "frame_view", "--config", good.to_str().unwrap(), "--samples", "12"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["config"]["seed"], 3);
    assert_eq!(r["config"]["samples"], 12);
}

#[test]
fn list_and_schema() {
    let out = run(&["list"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 11);
    assert!(text.contains("gluing_demo"));
    let schema: Value = serde_json::from_slice(&run(&["report-schema"]).stdout).unwrap();
    assert_eq!(schema["properties"]["schema"]["const"], "1");
    assert_eq!(schema["properties"]["scenario"]["enum"].as_array().unwrap().len(), 11);
}

#[test]
fn torus_sweep_for_one_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let csv_path = dir.path().join("r.csv");
    let out = run(&[
        "scenario",
        "torus_sweep",
        "--n",
        "2",
        "--json",
        json.to_str().unwrap(),
        "--csv",
        csv_path.to_str().unwrap(),
        "--no-timestamp",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS sweep2.criterion_agreement"));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(r["details"]["sweep2"]["records"], 60);

    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let header = reader.headers().unwrap().clone();
    assert_eq!(&header[3], "fast_verdict");
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 60);
    assert!(rows.iter().all(|r| r[3] == r[4]));
    let bytes = std::fs::read(&csv_path).unwrap();
    assert!(!bytes.contains(&b'\r'));
}

#[test]
fn plaquette_csv_sums_to_the_chern_number() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("phases.csv");
    let out = run(&["scenario", "cpn_conjugation", "--csv", csv_path.to_str().unwrap(), "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), vec!["face", "phase"]);
    let sum: f64 = reader.records().map(|r| r.unwrap()[1].parse::<f64>().unwrap()).sum();
    assert_eq!((sum / (2.0 * PI)).round() as i64, -1);
}

#[test]
fn empty_table_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("empty.csv");
    bundlelift::cli::Table::new(&["a", "b"]).write(&p).unwrap();
    assert_eq!(std::fs::read_to_string(&p).unwrap(), "a,b\n");
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let with = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_bundlelift"))
            .args(["scenario", "metrize_random", "--no-timestamp", "--seed", "5"])
            .env("BUNDLELIFT_THREADS", threads)
            .output()
            .unwrap()
    };
    let (one, four) = (with("1"), with("4"));
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn seeds_change_the_report() {
    let a = run(&["scenario", "frame_view", "--seed", "1", "--no-timestamp"]);
    let b = run(&["scenario", "frame_view", "--seed", "2", "--no-timestamp"]);
    assert_ne!(a.stdout, b.stdout);
}
