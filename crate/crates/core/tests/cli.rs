use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nonlin-eig"))
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

/// metrics.csv without the wall-time column.
fn metrics_without_time(dir: &Path) -> Vec<String> {
    fs::read_to_string(dir.join("metrics.csv"))
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string())
        .collect()
}

const SMALL: &str = r#"{
  "problem": {
    "plaplace": { "shape": "lshape", "h": 0.1, "radius": { "fixed": 0.25 }, "p": 3 }
  },
  "initial": "ex1",
  "solver": { "method": "ipm", "iters": 6 },
  "output": { "snapshot_every": 3 }
}"#;

#[test]
fn bundled_ex1_writes_thirty_rows() {
    let out = tempfile::tempdir().unwrap();
    let cfg = bundled("ex1_lshape_p3.json");
    let o = run(&["run", cfg.to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics = fs::read_to_string(out.path().join("metrics.csv")).unwrap();
    let mut lines = metrics.lines();
    assert_eq!(lines.next(), Some("iter,rq,dual_rq,cosim,gap,residual,inner_iters,wall_time"));
    assert_eq!(lines.count(), 30);
    for name in ["final.csv", "run.json", "ipm_iter0.csv", "ipm_iter10.csv", "ipm_iter20.csv"] {
        assert!(out.path().join(name).exists(), "{name}");
    }
    // 81x81 lattice including boundary zeros
    let final_csv = fs::read_to_string(out.path().join("final.csv")).unwrap();
    assert_eq!(final_csv.lines().count(), 81);
    assert_eq!(final_csv.lines().next().unwrap().split(',').count(), 81);
}

#[test]
fn run_record_reproduces_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    fs::write(&cfg, SMALL).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = run(&["run", cfg.to_str().unwrap(), "--threads", "2", "--out", a.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let record = a.join("run.json");
    let o = run(&["run", record.to_str().unwrap(), "--threads", "2", "--out", b.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(metrics_without_time(&a), metrics_without_time(&b));
    assert_eq!(fs::read(a.join("final.csv")).unwrap(), fs::read(b.join("final.csv")).unwrap());
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    fs::write(&cfg, SMALL).unwrap();
    let (a, b) = (dir.path().join("one"), dir.path().join("four"));
    assert!(run(&["run", cfg.to_str().unwrap(), "--threads", "1", "--out", a.to_str().unwrap()]).status.success());
    assert!(run(&["run", cfg.to_str().unwrap(), "--threads", "4", "--out", b.to_str().unwrap()]).status.success());
    assert_eq!(metrics_without_time(&a), metrics_without_time(&b));
}

#[test]
fn invalid_exponent_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, SMALL.replace("\"p\": 3", "\"p\": 0.5")).unwrap();
    let o = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.json:3:"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn malformed_json_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("broken.json");
    fs::write(&cfg, SMALL.replace("\"iters\": 6 }", "\"iters\": 6 ")).unwrap();
    let o = run(&["describe", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("broken.json:"));
}

#[test]
fn describe_echoes_resolved_parameters() {
    let o = run(&["describe", bundled("ex2_balanced_p3.json").to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let grid = &v["resolved"]["problem"]["grid"];
    let (h, r) = (grid["h"].as_f64().unwrap(), grid["r"].as_f64().unwrap());
    assert!((r.powf(1.6) - h).abs() < 1e-14);
    assert!(grid["mean_value_constant"].as_f64().unwrap() > 0.0);
    assert_eq!(grid["epsilon"].as_f64(), Some(1e-9));
    assert_eq!(v["resolved"]["problem"]["nx"].as_u64(), Some(101));
}

#[test]
fn every_bundled_config_validates() {
    for entry in fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")).unwrap() {
        let path = entry.unwrap().path();
        let o = run(&["describe", path.to_str().unwrap()]);
        assert!(o.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn matrix_config_runs() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["run", bundled("spd_diag.json").to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let record: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.path().join("run.json")).unwrap()).unwrap();
    let lambda = record["summary"]["final_lambda"].as_f64().unwrap();
    let smallest = record["resolved"]["problem"]["eigenvalues"][0].as_f64().unwrap();
    assert!((lambda - smallest).abs() < 1e-9 * smallest, "{lambda} vs {smallest}");
}

#[test]
fn quick_validation_passes() {
    let o = run(&["validate", "--scale", "quick"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("checks passed"));
}
