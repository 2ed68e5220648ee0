use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finsler-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn euclidean_density_is_power_law() {
    let tmp = TempDir::new().unwrap();
    let o = run(&[
        "density",
        "--zoo",
        "euclidean",
        "--dim",
        "3",
        "--rmin",
        "0.1",
        "--rmax",
        "2",
        "--rn",
        "20",
        "--dirs",
        "16",
        "--out",
        &out_arg(tmp.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&tmp.path().join("profile.csv"));
    assert_eq!(rows.len(), 20 * 16);
    for row in rows {
        let r: f64 = row[4].parse().unwrap();
        let sigma: f64 = row[5].parse().unwrap();
        assert!((sigma - r * r).abs() < 1e-6, "r = {r}: {sigma}");
    }
}

#[test]
fn funk_mean_curvature_matches_closed_form() {
    let tmp = TempDir::new().unwrap();
    let o = run(&[
        "density",
        "--zoo",
        "funk",
        "--dim",
        "2",
        "--rmin",
        "0.5",
        "--rmax",
        "3",
        "--rn",
        "51",
        "--dirs",
        "8",
        "--out",
        &out_arg(tmp.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for row in csv_rows(&tmp.path().join("profile.csv")) {
        let r: f64 = row[4].parse().unwrap();
        let pi: f64 = row[7].parse().unwrap();
        // two-dimensional Funk: coth(r/2)/2 - 3/2
        let exact = 0.5 / (0.5 * r).tanh() - 1.5;
        assert!((pi - exact).abs() < 1e-3, "r = {r}: {pi} vs {exact}");
    }
}

#[test]
fn malformed_metric_exits_two_without_output() {
    let tmp = TempDir::new().unwrap();
    let spec = tmp.path().join("bad.json");
    std::fs::write(&spec, "{ \"kind\": ").unwrap();
    let out = tmp.path().join("out");
    let o = run(&[
        "density",
        "--metric",
        spec.to_str().unwrap(),
        "--out",
        &out_arg(&out),
        "--format",
        "csv,svg",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("metric specification"));
    assert!(!out.exists());
}

#[test]
fn fish_tank_is_locally_harmonic() {
    let tmp = TempDir::new().unwrap();
    let o = run(&[
        "harmonicity",
        "--zoo",
        "fish-tank",
        "--dim",
        "3",
        "--rmin",
        "0.1",
        "--rmax",
        "0.6",
        "--rn",
        "11",
        "--out",
        &out_arg(tmp.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(tmp.path())["verdicts"]["local"], Value::Bool(true));
}

#[test]
fn funk_horosphere_curvature() {
    let tmp = TempDir::new().unwrap();
    let o = run(&[
        "harmonicity",
        "--zoo",
        "funk",
        "--dim",
        "2",
        "--rmin",
        "0.5",
        "--rmax",
        "8",
        "--rn",
        "76",
        "--dirs",
        "16",
        "--out",
        &out_arg(tmp.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let h = report(tmp.path())["verdicts"]["ahf"]["h"]
        .as_f64()
        .expect("ahf estimate present");
    assert!((h + 1.0).abs() < 1e-3, "h = {h}");
}

#[test]
fn perturbed_metric_is_not_harmonic() {
    let tmp = TempDir::new().unwrap();
    let o = run(&[
        "harmonicity",
        "--zoo",
        "perturbed",
        "--dim",
        "2",
        "--base",
        "0.5,0.5",
        "--rmin",
        "0.1",
        "--rmax",
        "0.6",
        "--rn",
        "11",
        "--out",
        &out_arg(tmp.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(tmp.path())["verdicts"]["local"], Value::Bool(false));
}

#[test]
fn outputs_are_deterministic_across_thread_counts() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = |d: &TempDir| {
        vec![
            "harmonicity".to_string(),
            "--zoo".into(),
            "hyperbolic".into(),
            "--dim".into(),
            "2".into(),
            "--rn".into(),
            "10".into(),
            "--format".into(),
            "json,csv,svg".into(),
            "--out".into(),
            out_arg(d.path()),
        ]
    };
    for (d, threads) in [(&a, "1"), (&b, "4")] {
        let o = Command::new(env!("CARGO_BIN_EXE_finsler-lab"))
            .args(args(d))
            .env("FINSLER_LAB_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in [
        "report.json",
        "profile.csv",
        "density.svg",
        "psi.svg",
        "spread.svg",
    ] {
        assert_eq!(
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_finsler-lab"))
        .args(["tables", "--out", &out_arg(tmp.path())])
        .env("FINSLER_LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tables_default_to_markdown() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["tables", "--out", &out_arg(tmp.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let md = std::fs::read_to_string(tmp.path().join("tables.md")).unwrap();
    assert!(md.contains("| ") && md.contains("sinh"));
    assert!(!tmp.path().join("tables.csv").exists());
}

#[test]
fn long_beta_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("t");
    let o = run(&["tables", "--f", "2*r", "--out", &out_arg(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn cross_check_failure_exits_three_without_output() {
    // the extreme-measure columns disagree with the numeric densities
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("t");
    let o = run(&[
        "tables",
        "--f",
        "0.5*r/(1+r)",
        "--n",
        "2",
        "--out",
        &out_arg(&out),
    ]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("cross-check BH") && stdout.contains("cross-check HT"));
    assert_eq!(o.status.code(), Some(3));
    assert!(!out.exists());
}

#[test]
fn numeric_columns_without_check() {
    let tmp = TempDir::new().unwrap();
    let o = run(&[
        "tables",
        "--f",
        "0.5*r/(1+r)",
        "--no-check",
        "--format",
        "csv",
        "--out",
        &out_arg(tmp.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(tmp.path().join("tables.csv").exists());
}

#[test]
fn sphere_geodesic_reports_conjugate_radius() {
    let tmp = TempDir::new().unwrap();
    let o = run(&[
        "geodesic",
        "--zoo",
        "sphere",
        "--dim",
        "2",
        "--base",
        "0.2,-0.1",
        "--dir",
        "0.3,1",
        "--rmax",
        "5",
        "--out",
        &out_arg(tmp.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("geodesic.json")).unwrap())
            .unwrap();
    let r = v["first_conjugate_radius"].as_f64().unwrap();
    assert!((r - std::f64::consts::PI).abs() < 1e-3, "{r}");
    assert!(tmp.path().join("trajectory.csv").exists());
}
