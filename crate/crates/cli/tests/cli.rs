use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use slicecalc::io::parse_operator;
use slicecalc::{CliffordMatrix, Paravector};

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/pauli.json");

fn slicecalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slicecalc")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn blade(v: &Value, key: &str) -> Vec<Vec<f64>> {
    match v["value"]["components"].get(key) {
        None => vec![vec![0.0; 2]; 2],
        Some(rows) => serde_json::from_value(rows.clone()).unwrap(),
    }
}

fn max_diff(a: &Value, b: &Value) -> f64 {
    let mut worst: f64 = 0.0;
    for k in ["", "1", "2", "12"] {
        let (x, y) = (blade(a, k), blade(b, k));
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((x[i][j] - y[i][j]).abs());
            }
        }
    }
    worst
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn spectrum_exact_rows() {
    let o = slicecalc(&["spectrum", "--input", FIXTURE, "--method", "exact"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(text.lines().next(), Some("u,r,multiplicity,method"));
    assert_eq!(rows.len(), 2);
    for (row, r) in rows.iter().zip([0.0, 2.0]) {
        assert!(row[0].parse::<f64>().unwrap().abs() < 1e-10);
        assert!((row[1].parse::<f64>().unwrap() - r).abs() < 1e-10);
        assert_eq!(row[3], "exact");
    }
}

#[test]
fn spectrum_scan_and_both() {
    let o = slicecalc(&["spectrum", "--input", FIXTURE, "--method", "scan", "--step", "0.05"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].0.abs() <= 0.05 && rows[0].1.abs() <= 0.05);
    assert!(rows[1].0.abs() <= 0.05 && (rows[1].1 - 2.0).abs() <= 0.05);

    let o = slicecalc(&["spectrum", "--input", FIXTURE, "--method", "both", "--step", "0.05"]);
    let text = stdout(&o);
    let last = text.lines().last().unwrap();
    let h: f64 = last.strip_prefix("# hausdorff=").unwrap().parse().unwrap();
    assert!(h <= 0.05);
    assert_eq!(text.lines().filter(|l| l.ends_with(",scan")).count(), 2);
}

#[test]
fn spectrum_files_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("spec.csv");
    let o = slicecalc(&["spectrum", "--input", FIXTURE, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert!(fs::read_to_string(&out).unwrap().starts_with("u,r,"));
    let plot = fs::read_to_string(dir.path().join("spec.plot.csv")).unwrap();
    let lines: Vec<&str> = plot.lines().collect();
    assert_eq!(lines[0], "u,v");
    // (0, 0) once, (0, ±2) twice
    assert_eq!(lines.len(), 4);
}

#[test]
fn schema_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let ragged = write(dir.path(), "ragged.json", r#"{"n": 2, "d": 2, "components": {"1": [[1, 0], [0]]}}"#);
    let o = slicecalc(&["spectrum", "--input", &ragged]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 1"));

    let o = slicecalc(&["spectrum", "--input", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let big = write(dir.path(), "big.json", r#"{"n": 3, "d": 1, "components": {"1": [[1]]}}"#);
    let o = Command::new(env!("CARGO_BIN_EXE_slicecalc"))
        .args(["spectrum", "--input", &big])
        .env("SLICECALC_MAX_N", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(slicecalc(&["spectrum", "--input", &big]).status.code(), Some(0));

    assert_eq!(slicecalc(&["apply", "--input", FIXTURE, "--fn", "tan"]).status.code(), Some(2));
    assert_eq!(slicecalc(&["apply", "--input", FIXTURE, "--fn", "exp", "--plane", "e3"]).status.code(), Some(2));
    assert_eq!(slicecalc(&["verify", "--suite", "nope"]).status.code(), Some(2));
}

#[test]
fn missing_scalar_component_defaults_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "no0.json", r#"{"n": 2, "d": 2, "components": {"1": [[1, 0], [0, -1]], "2": [[0, 1], [1, 0]]}}"#);
    let a = slicecalc(&["spectrum", "--input", &f]);
    let b = slicecalc(&["spectrum", "--input", FIXTURE]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn apply_one_and_square() {
    let o = slicecalc(&["apply", "--input", FIXTURE, "--fn", "one"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let id = serde_json::json!({"value": {"components": {"": [[1.0, 0.0], [0.0, 1.0]]}}});
    assert!(max_diff(&v, &id) <= 1e-10);
    assert_eq!(v["nodes"], 512);
    assert!(v["clearance"].as_f64().unwrap() > 0.0);

    // (σ₃e₁ + σ₁e₂)² = −2I + (σ₃σ₁ − σ₁σ₃)e₁₂
    let o = slicecalc(&["apply", "--input", FIXTURE, "--fn", "poly:m=2", "--plane", "0.6,0.8"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let sq = serde_json::json!({"value": {"components": {"": [[-2.0, 0.0], [0.0, -2.0]], "12": [[0.0, 2.0], [-2.0, 0.0]]}}});
    assert!(max_diff(&v, &sq) <= 1e-8);
    assert_eq!(v["plane"], serde_json::json!([0.6, 0.8]));
}

#[test]
fn chart_route_matches_default_route() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let o = slicecalc(&["apply", "--input", FIXTURE, "--fn", "ratpole:c=5", "--out", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let o = slicecalc(&["apply", "--input", FIXTURE, "--fn", "ratpole:c=5", "--chart", "k=3", "--out", b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let va: Value = serde_json::from_str(&fs::read_to_string(a).unwrap()).unwrap();
    let vb: Value = serde_json::from_str(&fs::read_to_string(b).unwrap()).unwrap();
    assert!(max_diff(&va, &vb) <= 1e-8);

    // k in the spectrum, and a function without a value at infinity
    assert_eq!(slicecalc(&["apply", "--input", FIXTURE, "--fn", "ratpole:c=5", "--chart", "k=0"]).status.code(), Some(4));
    assert_eq!(slicecalc(&["apply", "--input", FIXTURE, "--fn", "exp", "--chart", "k=3"]).status.code(), Some(2));
}

#[test]
fn clearance_failures_exit_4_without_partial_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = slicecalc(&["apply", "--input", FIXTURE, "--fn", "exp", "--margin", "1e-9", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(!out.exists());
    let o = slicecalc(&["resolvent", "--input", FIXTURE, "--s", "2 e1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn resolvent_command() {
    let o = slicecalc(&["resolvent", "--input", FIXTURE, "--s", "0.5 + 1.5 e1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let r = parse_operator(&v["value"].to_string(), 8).unwrap();
    let t = parse_operator(&fs::read_to_string(FIXTURE).unwrap(), 8).unwrap();
    let s = Paravector::parse("0.5 + 1.5 e1", 2).unwrap();
    // S⁻¹(s,T)s − T S⁻¹(s,T) = I
    let (r, t) = (r.as_clifford(), t.as_clifford());
    let lhs = &r.mul_right(&s.to_multivector()).unwrap() - &t.compose(r).unwrap();
    assert!((&lhs - &CliffordMatrix::identity(2, 2)).rep_norm() <= 1e-12);
}

#[test]
fn verify_suites() {
    let o = slicecalc(&["verify", "--suite", "resolvent", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["seed"], 7);
    assert_eq!(v["pass"], true);
    let eq = &v["suites"][0]["checks"][0];
    assert_eq!(eq["name"], "resolvent_equation");
    assert!(eq["value"].as_f64().unwrap() <= 1e-10);

    let o = slicecalc(&["verify", "--suite", "planes"]);
    assert_eq!(o.status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        assert_eq!(slicecalc(&["verify", "--suite", "kernel", "--seed", "11", "--out", p.to_str().unwrap()]).status.code(), Some(0));
    }
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}
