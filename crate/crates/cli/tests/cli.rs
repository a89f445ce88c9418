use std::fs;
use std::process::Command;

fn loopforge() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_loopforge"));
    c.env_remove("LOOPFORGE_SEED");
    c
}

#[test]
fn parity_run_passes_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = loopforge()
        .args(["run", "parity", "--graph", "path4", "--a", "1", "--b", "1", "--replicas", "100000", "--seed", "7", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let even_odd = report["results"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["functional"] == "P[even] - P[odd] crossings")
        .unwrap();
    assert!((even_odd["reference"].as_f64().unwrap() - (-2f64).exp()).abs() < 1e-9);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert!(manifest["started"].is_string());
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.starts_with("experiment,functional,n,statistic,p,reference,verdict\n"));
}

#[test]
fn missing_fixture_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = loopforge()
        .args(["run", "two-point", "--graph", "nosuchgraph", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nosuchgraph"));
}

#[test]
fn negative_control_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = loopforge()
        .args(["run", "switching", "--negative-control", "parity-even", "--replicas", "20000", "--seed", "3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("failed: occupation"));
}

#[test]
fn csv_is_identical_across_job_counts_and_env_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let st = loopforge()
        .args(["run", "two-point", "--replicas", "5000", "--seed", "11", "--jobs", "1", "--out"])
        .arg(a.path())
        .output()
        .unwrap();
    assert!(st.status.code().is_some());
    let st = loopforge()
        .env("LOOPFORGE_SEED", "11")
        .args(["run", "two-point", "--replicas", "5000", "--jobs", "4", "--out"])
        .arg(b.path())
        .output()
        .unwrap();
    assert!(st.status.code().is_some());
    let ca = fs::read(a.path().join("report.csv")).unwrap();
    let cb = fs::read(b.path().join("report.csv")).unwrap();
    assert_eq!(ca, cb);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"graph": "triangle", "replicas": 40}"#).unwrap();
    // 40 replicas is below the minimum
    let out = loopforge().args(["run", "pnew", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = loopforge()
        .args(["run", "pnew", "--replicas", "2000", "--seed", "1", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.code() == Some(0) || out.status.code() == Some(1));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["graph"], "triangle");
    assert_eq!(m["config"]["replicas"], 2000);
}

#[test]
fn fixture_json_roundtrips() {
    let out = loopforge().args(["fixture", "grid3x3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    fs::write(&path, &out.stdout).unwrap();
    let st = loopforge()
        .args(["run", "two-point", "--replicas", "1000", "--seed", "2", "--graph"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(matches!(st.status.code(), Some(0) | Some(1)));
}

#[test]
fn paths_csv_starts_at_the_source() {
    let dir = tempfile::tempdir().unwrap();
    let out = loopforge()
        .args(["paths", "--count", "20", "--seed", "4", "--mesh", "2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("paths.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "path,step,vertex,edge,local_time");
    // x is vertex 1 of path4
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().filter(|r| r[1] == "0").all(|r| r[2] == "1"));
    assert!(!rows.is_empty());
}
