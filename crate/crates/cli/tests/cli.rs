use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use adoe_core::moo::dominates;

fn table() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/ccd_runs.csv")
}

fn adoe(store: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adoe"))
        .arg("--store")
        .arg(store)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn analyze_reduced_model() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&adoe(dir.path(), &["analyze", "--data", table().to_str().unwrap(), "--model", "reduced"]));
    assert!(text.contains("R-sq 95.38%"), "{text}");
    let csv = stdout(&adoe(
        dir.path(),
        &["--format", "csv", "analyze", "--data", table().to_str().unwrap(), "--model", "reduced"],
    ));
    assert!(csv.starts_with("term,SS,F,p\n"));
    assert_eq!(csv.lines().count(), 1 + 1 + 5 + 1);
}

#[test]
fn nsga2_csv_is_mutually_nondominated() {
    let dir = tempfile::tempdir().unwrap();
    let csv = stdout(&adoe(
        dir.path(),
        &[
            "--format", "csv", "--seed", "1", "optimize", "--method", "nsga2", "--data",
            table().to_str().unwrap(), "--population", "40", "--generations", "30",
        ],
    ));
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "mould_temp_C,cooling_s,holding_s,barrel_temp_C,dt_C,cycle_s");
    let objs: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').skip(4).map(|v| v.parse().unwrap()).collect())
        .collect();
    assert!(objs.len() > 10);
    for a in &objs {
        assert!(!objs.iter().any(|b| dominates(b, a)));
    }
}

#[test]
fn campaign_round_trip_through_the_store() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path();
    stdout(&adoe(s, &["--seed", "9", "seed", "--id", "demo", "--design", table().to_str().unwrap()]));
    let plant = adoe_core::plant::PlantOracle::moulding();
    let csv = stdout(&adoe(s, &["--format", "csv", "status", "demo"]));
    for (k, line) in csv.lines().skip(1).enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        let x: Vec<f64> = cols[2..6].iter().map(|v| v.parse().unwrap()).collect();
        let y = plant.evaluate(&x, k as u64).unwrap();
        stdout(&adoe(s, &["observe", "demo", cols[0], &format!("{},{}", y.dt, y.cycle)]));
    }
    let again = adoe(s, &["observe", "demo", "t001", "1,2"]);
    assert!(!again.status.success());
    assert!(String::from_utf8_lossy(&again.stderr).contains("already observed"));

    let suggested = stdout(&adoe(s, &["--format", "csv", "suggest", "demo"]));
    assert_eq!(suggested.lines().count(), 3);
    let status = stdout(&adoe(s, &["status", "demo"]));
    assert!(status.contains("iteration 1, 14 trials (2 pending)"), "{status}");
    let record = stdout(&adoe(s, &["export", "demo"]));
    assert!(record.contains("\"schema_version\": 1"));
    assert!(stdout(&adoe(s, &["analyze", "--campaign", "demo"])).contains("dt_C"));

    // same seed and observations give the same suggestions
    let other = tempfile::tempdir().unwrap();
    let o = other.path();
    stdout(&adoe(o, &["--seed", "9", "seed", "--id", "demo", "--design", table().to_str().unwrap()]));
    for (k, line) in csv.lines().skip(1).enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        let x: Vec<f64> = cols[2..6].iter().map(|v| v.parse().unwrap()).collect();
        let y = plant.evaluate(&x, k as u64).unwrap();
        stdout(&adoe(o, &["observe", "demo", cols[0], &format!("{},{}", y.dt, y.cycle)]));
    }
    assert_eq!(stdout(&adoe(o, &["--format", "csv", "suggest", "demo"])), suggested);
}

#[test]
fn unknown_campaign_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = adoe(dir.path(), &["status", "nothing"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("not found"));
}

#[test]
fn init_writes_a_loadable_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    stdout(&adoe(dir.path(), &["init", "--mode", "single", "--out", cfg.to_str().unwrap()]));
    let text = stdout(&adoe(dir.path(), &["seed", "--config", cfg.to_str().unwrap(), "--id", "one"]));
    assert!(text.starts_with("campaign one"));
    assert_eq!(text.lines().count(), 13);
}

#[test]
fn simulate_reports_success_rate() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&adoe(dir.path(), &["simulate", "--mode", "single", "--seeds", "2"]));
    assert!(text.contains("grid minimum"));
    assert!(text.lines().last().unwrap().starts_with("success "));
    let csv = stdout(&adoe(dir.path(), &["--format", "csv", "simulate", "--mode", "multi", "--seeds", "2"]));
    assert_eq!(csv.lines().count(), 3);
}
