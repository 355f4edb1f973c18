use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn spsys(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spsys")).args(args).current_dir(dir).output().expect("spawn spsys")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn check<'a>(r: &'a Value, id: &str) -> &'a Value {
    r["checks"].as_array().unwrap().iter().find(|c| c["check_id"] == id).unwrap_or_else(|| panic!("no check {id} in {r}"))
}

const GOLDEN: &str = r#"{"d": 2, "depth": 6, "kind": "subshift", "forbidden": [[2, 2]]}"#;
const SYMMETRIC: &str = r#"{"d": 2, "depth": 6, "kind": "ideal",
  "generators": [[{"coeff": [1, 0], "word": [1, 2]}, {"coeff": [-1, 0], "word": [2, 1]}]]}"#;

#[test]
fn golden_dims_line() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "golden.json", GOLDEN);
    let out = spsys(&["dims", "--spec", "golden.json", "--depth", "6"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "1 2 3 5 8 13 21");
}

#[test]
fn symmetric_verify_passes() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "symmetric2.json", SYMMETRIC);
    let out = spsys(&["verify", "--spec", "symmetric2.json", "--depth", "6", "--checks", "axioms,defect"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["result"]["dims"], serde_json::json!([1, 2, 3, 4, 5, 6, 7]));
    for c in r["checks"].as_array().unwrap() {
        assert_eq!(c["verdict"], "pass");
        assert!(c["residual"].as_f64().unwrap() <= c["threshold"].as_f64().unwrap());
    }
    assert_eq!(check(&r, "defect")["window"], serde_json::json!([0, 5]));
}

#[test]
fn reports_are_byte_stable() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "golden.json", GOLDEN);
    let args = ["verify", "--spec", "golden.json", "--checks", "axioms,defect,subshift"];
    let a = spsys(&args, dir.path());
    let b = spsys(&args, dir.path());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(report(&a)["input_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn uniform_pair_commutes_but_not_strongly() {
    let dir = TempDir::new().unwrap();
    let third = format!("{0},{0},{0}\n", 1.0f64 / 3.0);
    write(dir.path(), "P.csv", &third.repeat(3));
    write(dir.path(), "Q.csv", "0.5,0,0.5\n0.25,0.5,0.25\n0.25,0.5,0.25\n");
    let out = spsys(&["cp", "strong-commute", "P.csv", "Q.csv"], dir.path());
    let r = report(&out);
    assert_eq!(r["result"]["commute"], true);
    assert_eq!(r["result"]["strong"], false);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_spec_is_an_input_error_with_context() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "bad.json", r#"{"d": 2, "kind": "subshift", "forbiden": [[2, 2]]}"#);
    let out = spsys(&["dims", "--spec", "bad.json", "--depth", "3"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("forbidden"), "{err}");

    write(dir.path(), "broken.json", "{\"d\": 2,\n \"kind\": }");
    let out = spsys(&["dims", "--spec", "broken.json", "--depth", "3"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn dead_subshift_does_not_crash() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "dead.json", r#"{"d": 2, "depth": 4, "kind": "subshift", "forbidden": [[1,1],[1,2],[2,1],[2,2]]}"#);
    let out = spsys(&["verify", "--spec", "dead.json", "--checks", "axioms,defect,subshift"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(&out)["result"]["dims"], serde_json::json!([1, 2, 0, 0, 0]));
    let out = spsys(&["dims", "--spec", "dead.json"], dir.path());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "1 2 0 0 0");
}

#[test]
fn budget_guard_fails_fast() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "golden.json", GOLDEN);
    let out = spsys(&["dims", "--spec", "golden.json", "--depth", "30", "--budget-mb", "64"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("MiB"));
}

#[test]
fn shift_export_round_trips_through_check_rep() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "golden.json", GOLDEN);
    let out = spsys(&["shift", "--spec", "golden.json", "--depth", "3", "--out", "shifts"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let s1: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("shifts/S1.json")).unwrap()).unwrap();
    let s2: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("shifts/S2.json")).unwrap()).unwrap();
    let h = s1["rows"].as_u64().unwrap();
    assert_eq!(h, 1 + 2 + 3 + 5);
    let rep = serde_json::json!({ "d": 2, "h": h, "matrices": [s1, s2] });
    write(dir.path(), "rep.json", &rep.to_string());
    let out = spsys(&["check-rep", "--spec", "golden.json", "--depth", "3", "--rep", "rep.json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    // Missing spec file.
    let out = spsys(&["shift", "--spec", "full.json", "--out", "full"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn non_representation_fails_at_level_two() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "golden.json", GOLDEN);
    let nil = r#"{"rows": 2, "cols": 2, "data": [[0,0],[0,0],[0,0],[0,0]]}"#;
    let jordan = r#"{"rows": 2, "cols": 2, "data": [[0,0],[0.5,0],[0,0],[0,0]]}"#;
    let diag = r#"{"rows": 2, "cols": 2, "data": [[0.5,0],[0,0],[0,0],[0.5,0]]}"#;
    write(dir.path(), "nil.json", &format!(r#"{{"d": 2, "h": 2, "matrices": [{nil}, {jordan}]}}"#));
    write(dir.path(), "bad.json", &format!(r#"{{"d": 2, "h": 2, "matrices": [{nil}, {diag}]}}"#));
    let out = spsys(&["check-rep", "--spec", "golden.json", "--depth", "4", "--rep", "nil.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let out = spsys(&["check-rep", "--spec", "golden.json", "--depth", "4", "--rep", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["result"]["failed_at"], 2);
    assert!((check(&r, "level-2")["residual"].as_f64().unwrap() - 0.25).abs() < 1e-12);

    let out = spsys(&["poisson", "--spec", "golden.json", "--depth", "8", "--rep", "nil.json", "--r", "0.6"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(check(&report(&out), "transform-∅-∅")["verdict"], "pass");
}

#[test]
fn piece_of_full_shift_is_golden_fock_space() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "golden.json", GOLDEN);
    write(dir.path(), "full.json", r#"{"d": 2, "kind": "full"}"#);
    let out = spsys(&["shift", "--spec", "full.json", "--depth", "4", "--out", "full"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let s1 = fs::read_to_string(dir.path().join("full/S1.json")).unwrap();
    let s2 = fs::read_to_string(dir.path().join("full/S2.json")).unwrap();
    write(dir.path(), "rep.json", &format!(r#"{{"d": 2, "h": 31, "matrices": [{s1}, {s2}]}}"#));
    let out = spsys(&["piece", "--spec", "golden.json", "--depth", "4", "--rep", "rep.json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(&out)["result"]["dim"], 1 + 2 + 3 + 5 + 8);
}

fn matrix(entries: &[[f64; 2]], n: usize) -> String {
    serde_json::json!({ "rows": n, "cols": n, "data": entries }).to_string()
}

#[test]
fn classify_commands() {
    let dir = TempDir::new().unwrap();
    let q = |a: f64| matrix(&[[1.0, 0.0], [a, 0.0], [1.0 / a, 0.0], [1.0, 0.0]], 2);
    write(dir.path(), "q2.json", &q(2.0));
    write(dir.path(), "qhalf.json", &q(0.5));
    write(dir.path(), "q3.json", &q(3.0));
    let out = spsys(&["classify", "qmat", "q2.json", "qhalf.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["sigma"], serde_json::json!([2, 1]));
    let out = spsys(&["classify", "qmat", "q2.json", "q3.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    write(dir.path(), "j.json", &matrix(&[[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 0.0]], 2));
    write(dir.path(), "zero.json", &matrix(&[[0.0, 0.0]; 4], 2));
    let out = spsys(&["classify", "quad", "j.json", "zero.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    write(dir.path(), "e11.json", &matrix(&[[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]], 2));
    write(dir.path(), "sym.json", &matrix(&[[1.0, 0.0], [0.0, 1.0], [0.0, 1.0], [-1.0, 0.0]], 2));
    let out = spsys(&["classify", "quad", "sym.json", "e11.json"], dir.path());
    let r = report(&out);
    assert_eq!(out.status.code(), Some(0), "{r}");
    assert!(r["result"]["residual"].as_f64().unwrap() <= 1e-8);

    let out = spsys(&["classify", "chars", "q2.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(report(&out)["result"]["tag"].is_string());
}

#[test]
fn kraus_dims() {
    let dir = TempDir::new().unwrap();
    let id = matrix(&[[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]], 2);
    write(dir.path(), "id.json", &format!(r#"{{"h": 2, "kraus": [{id}]}}"#));
    let out = spsys(&["cp", "as-dims", "--kraus", "id.json", "--n", "4"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["dims"], serde_json::json!([1, 1, 1, 1]));
}
