use std::path::Path;
use std::process::{Command, Output};

use uav_beamwidth::channel::LinkGains;
use uav_beamwidth::io::CSV_HEADER;
use uav_beamwidth::solver::{instance, SectorProblem};

fn uavbeam(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_uavbeam"));
    cmd.args(args).env_remove("UAVBEAM_OUT_DIR");
    if let Some(dir) = out {
        cmd.arg("--out").arg(dir);
    }
    cmd.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn presets_lists_the_catalog() {
    let o = uavbeam(&["presets"], None);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["rural", "urban", "height-sweep"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 3] = [
        &["run", "--preset", "nowhere"],
        &["run", "--preset", "rural", "--theta", "7"],
        &["run", "--preset", "rural", "--set", "lambda=-1"],
    ];
    for args in cases {
        let o = uavbeam(args, Some(dir.path()));
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
    let o = uavbeam(&["run", "--preset", "nowhere"], Some(dir.path()));
    assert!(stderr(&o).contains("rural"), "error lists presets: {}", stderr(&o));
}

#[test]
fn missing_instance_is_a_runtime_error() {
    let o = uavbeam(&["solve", "/definitely/not/here.txt"], None);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn run_writes_table_and_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let o = uavbeam(
        &["run", "--preset", "rural", "--trials", "3", "--theta", "30,60,90", "--per-trial"],
        Some(dir.path()),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let thetas: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(thetas, ["30", "60", "90"]);
    for sidecar in ["sweep.config.toml", "sweep.manifest.json", "trials.csv"] {
        assert!(dir.path().join(sidecar).exists(), "{sidecar}");
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("sweep.manifest.json")).unwrap()).unwrap();
    assert!(manifest["config_hash"].as_str().is_some_and(|h| h.len() == 64));
}

#[test]
fn saved_config_reproduces_the_run() {
    let first = tempfile::tempdir().unwrap();
    let o = uavbeam(&["run", "--preset", "urban", "--seed", "7", "--trials", "2", "--theta", "45,90"], Some(first.path()));
    assert!(o.status.success(), "{}", stderr(&o));
    let config = first.path().join("sweep.config.toml");

    let second = tempfile::tempdir().unwrap();
    let o = uavbeam(&["run", "--config", config.to_str().unwrap()], Some(second.path()));
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        std::fs::read(first.path().join("sweep.csv")).unwrap(),
        std::fs::read(second.path().join("sweep.csv")).unwrap()
    );
}

#[test]
fn solve_reports_a_clean_allocation() {
    let dir = tempfile::tempdir().unwrap();
    let gains = LinkGains::from_rows(&[
        vec![40.0, 2.0],
        vec![3.0, 30.0],
        vec![10.0, 12.0],
        vec![1.0, 5.0],
    ])
    .unwrap();
    let problem = SectorProblem::new(gains, 1.25, 1.0, 1e3, 1.0).unwrap();
    let path = dir.path().join("sector.txt");
    std::fs::write(&path, instance::dump(&problem)).unwrap();

    for solver in ["exact", "heuristic"] {
        let o = uavbeam(&["solve", path.to_str().unwrap(), "--solver", solver], None);
        assert!(o.status.success(), "{}", stderr(&o));
        let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(report["violations"].as_array().map(Vec::len), Some(0), "{report}");
        let pi = report["pi"].as_array().unwrap();
        assert_eq!(pi.len(), 4);
        assert!(report["total_power_w"].as_f64().unwrap() <= 1.25 * (1.0 + 1e-9));
    }
}

#[test]
fn trial_dump_is_json() {
    let o = uavbeam(&["trial", "--preset", "rural", "--theta", "30", "--index", "4"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let dump: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(dump["result"]["trial_index"], 4);
    assert!(dump["sectors"].as_array().unwrap().len() <= 12);
}
