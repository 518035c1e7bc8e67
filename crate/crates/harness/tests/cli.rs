use std::path::Path;
use std::process::Command;

use aeronav_harness::cli_main;

fn run(args: &[&str]) -> i32 {
    let mut full = vec!["aeronav"];
    full.extend_from_slice(args);
    cli_main(full)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(run(&["fly"]), 1);
    assert_eq!(run(&["run"]), 1);
    assert_eq!(run(&["sweep", "--out-dir", "x", "--variant", "KALMAN"]), 1);
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["sweep", "--biases", "120", "--out-dir", p(dir.path())]), 1);
}

#[test]
fn data_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("sensors.csv");
    std::fs::write(&log, "t,kind,a\n0.0,imu,oops\n").unwrap();
    assert_eq!(run(&["run", "--log", p(&log), "--out-dir", p(dir.path())]), 2);
    let missing = dir.path().join("missing.csv");
    assert_eq!(run(&["run", "--log", p(&missing), "--out-dir", p(dir.path())]), 2);
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_aeronav");
    assert_eq!(Command::new(bin).arg("--help").output().unwrap().status.code(), Some(0));
    assert_eq!(Command::new(bin).arg("nonsense").output().unwrap().status.code(), Some(1));
}

#[test]
fn simulate_and_run_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(run(&["simulate", "--preset", "mixed", "--seed", "3", "--out-dir", p(out)]), 0);
        let (cfg, log, truth) = (out.join("config.toml"), out.join("sensors.csv"), out.join("truth.csv"));
        let args = [
            "run", "--log", p(&log), "--truth", p(&truth),
            "--config", p(&cfg), "--variant", "RIEKF", "--out-dir", p(out),
        ];
        assert_eq!(run(&args), 0);
    }
    for file in ["sensors.csv", "truth.csv", "config.toml", "scenario.toml", "states.csv", "metrics.json"] {
        let x = std::fs::read(a.join(file)).unwrap();
        let y = std::fs::read(b.join(file)).unwrap();
        assert!(!x.is_empty() && x == y, "{file} differs between runs");
    }
    let metrics: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("metrics.json")).unwrap()).unwrap();
    let rmse = metrics["metrics"]["channels"]["attitude_deg"]["rmse"].as_f64().unwrap();
    assert!(rmse < 1.0, "attitude RMSE {rmse}");
}

#[test]
fn sweep_writes_one_row_per_case() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--preset", "convergence", "--biases", "-15,0,15", "--variant", "RIEKF,LIEKF,ESEKF", "--out-dir", p(dir.path())];
    assert_eq!(run(&args), 0);
    let mut reader = csv::Reader::from_path(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 9);
    let header = reader.headers().unwrap().clone();
    let ttc = header.iter().position(|h| h == "time_to_converge").unwrap();
    let bias = header.iter().position(|h| h == "bias_deg").unwrap();
    for r in rows.iter().filter(|r| r[bias].parse::<f64>().unwrap() == 0.0) {
        assert_eq!(r[ttc].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn denial_writes_a_control_row() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["denial", "--variant", "RIEKF", "--out-dir", p(dir.path())]), 0);
    let text = std::fs::read_to_string(dir.path().join("denial.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.contains("RIEKF") && text.contains("INS"));
}
