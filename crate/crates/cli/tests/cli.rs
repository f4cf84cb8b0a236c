use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn gdz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gdz")).args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const ROSE_PI: &str = r#"{"kind": "rose", "lengths": [1.0], "thetas": [3.141592653589793]}"#;
const CIRCLE: &str = r#"{"kind": "circle", "lengths": [1.0]}"#;

#[test]
fn validate_rose_reports_full_rank() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "rose.json", ROSE_PI);
    let out = gdz(&["validate", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("rank([A|B])      : 4 (required 4)"), "{text}");
    assert!(text.contains("self-adjoint     : yes"));
}

#[test]
fn invalid_config_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "bad.json", r#"{"kind": "rose", "lengths": [-1], "thetas": [0]}"#);
    let out = gdz(&["validate", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    let cfg = write(&dir, "syntax.json", "{\n\"kind\": \"rose\",\n\"lengths\": [1,]\n}");
    let out = gdz(&["spectrum", "--config", s(&cfg), "--kmax", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    let out = gdz(&["spectrum", "--config", s(&dir.path().join("missing.json")), "--kmax", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn circle_spectrum_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "circle.json", CIRCLE);
    let csv = dir.path().join("roots.csv");
    let out = gdz(&["spectrum", "--config", s(&cfg), "--kmax", "20", "--out", s(&csv)]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "index,k");
    assert_eq!(lines.len(), 4);
    for (n, line) in lines[1..].iter().enumerate() {
        let k: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((k - TAU * (n + 1) as f64).abs() < 1e-10);
    }
}

#[test]
fn rose_determinant() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "rose.json", ROSE_PI);
    let out = gdz(&["det", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((row[0] - 16.0).abs() < 1e-10);
    assert!(row[4] <= 1e-6);
}

#[test]
fn zeta_grid_is_deterministic_and_flags_override_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "circle.json", r#"{"kind": "circle", "lengths": [1.0], "mass": 0.5}"#);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = gdz(&["zeta", "--config", s(&cfg), "--grid", "0.25,0,0.1,0.05,3", "--mass", "0", "--out", s(p)]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (ta, tb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert!(text.starts_with("s_re,s_im,zeta_re,zeta_im,err\n"));
    assert_eq!(text.lines().count(), 4);
    // with the config's mass the massive strip applies: s = 1.5 is refused
    let out = gdz(&["zeta", "--config", s(&cfg), "--grid", "1.5,0,0,0,1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn epstein_prints_both_values() {
    let out = gdz(&["epstein", "--alpha", "0", "--c", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("E(0, 1) = -5.0000000000000000e-1"), "{text}");
    assert!(text.contains("E'(0, 1)"));
}

#[test]
fn selftest_single_criterion() {
    let out = gdz(&["selftest", "--criterion", "1", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("[PASS] criterion 1"));
    let out = gdz(&["selftest", "--criterion", "9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_cap_is_accepted() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "circle.json", CIRCLE);
    let out = Command::new(env!("CARGO_BIN_EXE_gdz"))
        .args(["spectrum", "--config", s(&cfg), "--kmax", "7"])
        .env("GDZ_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stderr.is_empty());
}
