use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn halo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_halo")).args(args).output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn fp_matrix(p: u64, n: usize, rows: &[&[&str]]) -> String {
    let entries: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect();
    serde_json::json!({
        "ring": {"p": p, "p_prec": 1, "t_prec": n, "group": null},
        "rows": rows.len(),
        "cols": rows[0].len(),
        "entries": entries,
    })
    .to_string()
}

fn assembly(name: &str) -> String {
    format!("{}/../../data/assemblies/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn polygon_of_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", &fp_matrix(3, 10, &[&["T", "0"], &["0", "T^2"]]));
    let out = halo(&["polygon", "--in", m.to_str().unwrap()]);
    assert!(out.status.success());
    let r = report(&out);
    assert_eq!(r["status"], "ok");
    assert_eq!(r["result"]["vertices"], serde_json::json!([[0, 0, 1], [1, 1, 1], [2, 3, 1]]));
    let out = halo(&["polygon", "--in", m.to_str().unwrap(), "--mode", "hodge"]);
    assert_eq!(report(&out)["result"]["vertices"], serde_json::json!([[0, 0, 1], [1, 1, 1], [2, 3, 1]]));
}

#[test]
fn missing_file_is_an_input_error() {
    let out = halo(&["polygon", "--in", "/nonexistent/m.json"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(report(&out)["status"], "input-error");
}

#[test]
fn malformed_matrix_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", r#"{"ring": {"p": 3}, "rows": 1}"#);
    let out = halo(&["polygon", "--in", m.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let asm = assembly("a1_s1.json");
    for out in [&a, &b] {
        let o = halo(&["scan", "--assembly", &asm, "--terms", "8", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn decompose_planted() {
    // conjugate of diag(T, T^3) by [[1, 0], [T^2, 1]]
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", &fp_matrix(5, 10, &[&["T", "0"], &["T^3 + 4*T^5", "T^3"]]));
    let out = halo(&["decompose", "--in", m.to_str().unwrap(), "--lambda", "1,3", "--vertex", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["result"]["certificates"]["all_ok"], true);
    assert_eq!(r["result"]["result"]["entries"][1][0], "0");
}

#[test]
fn decompose_rejects_non_vertex() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", &fp_matrix(5, 10, &[&["T", "1"], &["T^3", "T^3"]]));
    let out = halo(&["decompose", "--in", m.to_str().unwrap(), "--lambda", "0,3", "--vertex", "1"]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn lwx_fuzz_passes() {
    let out = halo(&["check", "--lwx-fuzz", "10", "--seed", "3", "--p", "5", "--size", "10"]);
    assert!(out.status.success());
    let r = report(&out);
    for shape in r["result"]["shapes"].as_array().unwrap() {
        assert_eq!(shape["violations"], serde_json::json!([]));
        assert_eq!(shape["entries_unverified"], 0);
    }
}

#[test]
fn mahler_bounds_and_basis_tag() {
    let out = halo(&["mahler", "--delta", "3,1,3,2", "--size", "6", "--bounds"]);
    let r = report(&out);
    assert_eq!(r["result"]["basis"], "modified");
    assert_eq!(r["result"]["bounds"]["passed"], true);
    let out = halo(&["mahler", "--delta", "3,1,3,3", "--size", "4"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn matrix_round_trip_through_charpoly() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", &fp_matrix(3, 10, &[&["T", "0"], &["0", "T^2"]]));
    let r = report(&halo(&["charpoly", "--in", m.to_str().unwrap(), "--terms", "2"]));
    assert_eq!(r["result"]["coeffs"], serde_json::json!(["1", "2*T^2 + 2*T", "1*T^3"]));
}

#[test]
fn scan_assembly() {
    let asm = assembly("a1_s1.json");
    let out = halo(&["scan", "--assembly", &asm, "--terms", "10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["result"]["bounds"]["passed"], true);
    assert_eq!(r["result"]["failures"], serde_json::json!([]));
    let fams = r["result"]["families"].as_array().unwrap();
    assert!(!fams.is_empty());
    assert!(fams.iter().all(|f| f["kind"]["type"] == "-"));
}

#[test]
fn scan_rejects_bad_grid() {
    let asm = assembly("a1_s1.json");
    let out = halo(&["scan", "--assembly", &asm, "--terms", "6", "--vt", "3/2"]);
    assert_eq!(out.status.code(), Some(4));
}
