use std::path::Path;
use std::process::Command;

fn mathieu(args: &[&str]) -> i32 {
    let status = Command::new(env!("CARGO_BIN_EXE_mathieu"))
        .args(args)
        .output()
        .expect("binary runs");
    status.status.code().expect("exit code")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn zz_sweep_defaults_find_one_root_and_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(mathieu(&["zz-sweep", "--out", a.to_str().unwrap()]), 0);
    assert_eq!(mathieu(&["zz-sweep", "--threads", "1", "--out", b.to_str().unwrap()]), 0);
    for f in ["zz_sweep.csv", "zz_sweep.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let report = read_json(&a.join("zz_sweep.json"));
    assert_eq!(report["sign_changes"], 1);
    let root = report["epsilon_zero_numeric_ghz"].as_f64().unwrap();
    assert!(root > 0.015 && root < 0.025, "{root}");
    assert_eq!(data_rows(&a.join("zz_sweep.csv")).len(), 201);
}

#[test]
fn uncoupled_device_sweep_is_identically_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"version = 1
[device]
modes = [
  { label = "q1", dim = 6, omega = 5.2, alpha = 0.25 },
  { label = "q2", dim = 6, omega = 5.75, alpha = 0.25 },
]
couplings = [{ i = 0, j = 1, g = 0.0 }]
[zz_sweep.grid]
start = 0.0
stop = 0.05
points = 11
"#,
    );
    let out = dir.path().join("out");
    assert_eq!(mathieu(&["zz-sweep", "--config", &cfg, "--out", out.to_str().unwrap()]), 0);
    let rows = data_rows(&out.join("zz_sweep.csv"));
    assert_eq!(rows.len(), 11);
    for r in &rows {
        let j: f64 = r[1].parse().unwrap();
        assert!(j.abs() < 1e-12, "{r:?}");
    }
    // Without coupling the closed form keeps only the drive's own level
    // shift, which vanishes at zero amplitude.
    let first: f64 = rows[0][2].parse().unwrap();
    assert!(first.abs() < 1e-15);
    assert_eq!(read_json(&out.join("zz_sweep.json"))["sign_changes"], 0);
}

#[test]
fn configuration_errors_exit_with_usage_status() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let cases = [
        "version = 1\n[zz_sweep.grid]\nvalues = []\n",
        "version = 1\nbogus = 3\n",
        "version = 1\n[chain]\nhorizon = 0.0\n",
        "version = 7\n",
        "not toml at all [",
    ];
    for text in cases {
        let cfg = write_config(dir.path(), text);
        assert_eq!(mathieu(&["zz-sweep", "--config", &cfg, "--out", out]), 2, "{text}");
    }
    assert_eq!(mathieu(&["zz-sweep", "--threads", "0", "--out", out]), 2);
    assert_eq!(mathieu(&["zz-sweep", "--config", "/nonexistent/run.toml", "--out", out]), 2);
    assert_eq!(mathieu(&["no-such-command"]), 2);
    assert_eq!(mathieu(&[]), 2);
    assert_eq!(mathieu(&["--help"]), 0);
}

#[test]
fn analytic_and_validate_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(mathieu(&["analytic", "--out", out.to_str().unwrap()]), 0);
    assert!(out.join("analytic.csv").exists());
    assert_eq!(mathieu(&["validate", "--out", out.to_str().unwrap()]), 0);
    let report = read_json(&out.join("validate.json"));
    let checks = report["checks"].as_array().expect("checks array");
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["passed"] == true), "{report}");
}

#[test]
fn small_qcq_map_has_drive_independent_static_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "version = 1\n[qcq_map.epsilon]\nvalues = [0.0, 0.04]\n[qcq_map.omega_d]\nvalues = [5.28, 5.3, 5.32]\n",
    );
    let out = dir.path().join("out");
    assert_eq!(mathieu(&["qcq-map", "--config", &cfg, "--out", out.to_str().unwrap()]), 0);
    let rows = data_rows(&out.join("qcq_map.csv"));
    assert_eq!(rows.len(), 6);
    let statics: Vec<f64> = rows
        .iter()
        .filter(|r| r[1].parse::<f64>().unwrap() == 0.0)
        .map(|r| r[2].parse().unwrap())
        .collect();
    assert_eq!(statics.len(), 3);
    for j in &statics {
        assert!((j - statics[0]).abs() < 1e-12, "{statics:?}");
    }
    assert!(std::fs::read_to_string(out.join("qcq_map.csv")).unwrap().starts_with("# contour-spacing"));
}
