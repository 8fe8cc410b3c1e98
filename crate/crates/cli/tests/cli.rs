use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use uwsn_core::topology::{distance, Topology};

fn uwsn(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uwsn"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn deploy_is_reproducible_and_in_bounds() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["deploy", "--sensors", "10", "--auvs", "5", "--hubs", "2", "--seed", "42", "--field", "100"];
    assert!(uwsn(&tmp.path().join("a"), &args).status.success());
    assert!(uwsn(&tmp.path().join("b"), &args).status.success());
    let a = read(tmp.path().join("a/topology.json"));
    assert_eq!(a, read(tmp.path().join("b/topology.json")));
    let t = Topology::from_json(&a).unwrap();
    assert_eq!((t.sensors.len(), t.auvs.len(), t.hubs.len(), t.seed), (10, 5, 2, 42));
    assert!(t.sensors.iter().chain(&t.auvs).chain(&t.hubs).all(|n| (0.0..=100.0).contains(&n.x) && (0.0..=100.0).contains(&n.y)));
}

#[test]
fn validation_errors_exit_2_with_json() {
    let tmp = tempfile::tempdir().unwrap();
    let out = uwsn(tmp.path(), &["deploy", "--hubs", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["message"].as_str().unwrap().contains("hubs must be >= 1"));

    let out = uwsn(tmp.path(), &["run", "--salinity", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["field"], "salinity_psu");

    let config = tmp.path().join("bad.json");
    std::fs::write(&config, r#"{"runs": 2, "typo": true}"#).unwrap();
    let out = uwsn(tmp.path(), &["experiment", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("report.json").exists());
}

#[test]
fn io_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("occupied");
    std::fs::write(&file, "").unwrap();
    let out = uwsn(&file, &["deploy"]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "io");
}

#[test]
fn config_file_and_flag_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.json");
    std::fs::write(&config, r#"{"base_seed": 9, "counts": {"sensors": 4, "auvs": 1, "hubs": 1}}"#).unwrap();
    let cfg = config.to_str().unwrap();
    assert!(uwsn(&tmp.path().join("a"), &["deploy", "--config", cfg]).status.success());
    assert!(uwsn(&tmp.path().join("b"), &["deploy", "--config", cfg, "--seed", "10", "--temp", "5"]).status.success());
    let a = Topology::from_json(&read(tmp.path().join("a/topology.json"))).unwrap();
    let b = Topology::from_json(&read(tmp.path().join("b/topology.json"))).unwrap();
    assert_eq!((a.seed, a.sensors.len()), (9, 4));
    assert_eq!((b.seed, b.environment.temperature_c), (10, 5.0));
}

#[test]
fn optimize_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(uwsn(tmp.path(), &["optimize", "--seed", "4"]).status.success());
    let convergence = read(tmp.path().join("convergence.csv"));
    let mut rows: Vec<(String, f64)> = Vec::new();
    for line in convergence.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        rows.push((cols[0].to_string(), cols[2].parse().unwrap()));
    }
    assert_eq!(rows.len(), 41 + 51);
    for w in rows.windows(2) {
        if w[0].0 == w[1].0 {
            assert!(w[1].1 <= w[0].1);
        }
    }
    let clusters: Value = serde_json::from_str(&read(tmp.path().join("cluster.json"))).unwrap();
    assert_eq!(clusters["k"], 5);

    let single = tmp.path().join("single");
    assert!(uwsn(&single, &["optimize", "--sensors", "1", "--auvs", "0", "--hubs", "1", "--seed", "3"]).status.success());
    let t = Topology::from_json(&read(single.join("topology.json"))).unwrap();
    assert!(distance(&t.sensors[0].position(), &t.hubs[0].position()) < 1.0);
}

#[test]
fn run_initial_has_no_auv_traffic() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(uwsn(tmp.path(), &["run", "--scenario", "initial"]).status.success());
    let reports: Value = serde_json::from_str(&read(tmp.path().join("report.json"))).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 1);
    assert_eq!(reports[0]["auv_usage_rate"], 0.0);
    let routes = read(tmp.path().join("routes.csv"));
    assert!(routes.lines().skip(1).all(|l| l.contains(",Direct → Hub ")));
}

#[test]
fn single_run_experiment_matches_run() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(uwsn(&tmp.path().join("run"), &["run", "--seed", "13"]).status.success());
    assert!(uwsn(&tmp.path().join("exp"), &["experiment", "--runs", "1", "--seed", "13"]).status.success());
    assert_eq!(read(tmp.path().join("run/runs.csv")), read(tmp.path().join("exp/runs.csv")));

    let aggregate: Value = serde_json::from_str(&read(tmp.path().join("exp/report.json"))).unwrap();
    let reports: Value = serde_json::from_str(&read(tmp.path().join("run/report.json"))).unwrap();
    for (summary, report) in aggregate["summaries"].as_array().unwrap().iter().zip(reports.as_array().unwrap()) {
        assert_eq!(summary["success_rate"]["mean"], report["success_rate"]);
    }
    let summary = read(tmp.path().join("exp/summary.csv"));
    assert_eq!(summary.lines().next(), Some("scenario,mean_success_rate"));
}

#[test]
fn experiment_density_mode() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(uwsn(tmp.path(), &["experiment", "--runs", "2", "--density", "per-node"]).status.success());
    let aggregate: Value = serde_json::from_str(&read(tmp.path().join("report.json"))).unwrap();
    assert_eq!(aggregate["spec"]["auv_density"], "per_node");
    let rows: Vec<String> = read(tmp.path().join("runs.csv")).lines().skip(1).map(String::from).collect();
    assert_eq!(rows.len(), 6);
    let tail = |s: &str| s.split_once(',').unwrap().1.split_once(',').unwrap().1.to_string();
    assert_eq!(tail(&rows[1]), tail(&rows[2]));
}
