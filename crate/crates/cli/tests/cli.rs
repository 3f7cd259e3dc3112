use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mpkforge(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpkforge"))
        .args(args)
        .current_dir(dir)
        .env("SOURCE_DATE_EPOCH", "0")
        .env_remove("MPKFORGE_THREADS")
        .output()
        .expect("spawn mpkforge")
}

fn json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn strip_timing(v: &mut Value) {
    if let Value::Object(m) = v {
        m.remove("timing");
    }
}

fn chain(dir: &Path) {
    let o = mpkforge(dir, &["gen", "--kind", "stencil5", "--dims", "20", "-o", "chain.mtx"]);
    assert!(o.status.success());
}

#[test]
fn run_report_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    chain(dir.path());
    let o = mpkforge(dir.path(), &["run", "-m", "chain.mtx", "-n", "2", "-p", "3", "--algo", "dlb", "--cache", "1KiB", "--x", "rand:5"]);
    let mut got = json(&o);
    strip_timing(&mut got);
    let golden: Value = serde_json::from_str(include_str!("golden/run_chain.json")).unwrap();
    assert_eq!(got, golden);
}

#[test]
fn run_keys_and_redundancy() {
    let dir = tempfile::tempdir().unwrap();
    let g = json(&mpkforge(dir.path(), &["gen", "--kind", "stencil7", "--dims", "6,5,4", "-o", "a.mtx"]));
    assert_eq!(g["stats"]["n_rows"], 120);
    for algo in ["trad", "dlb", "ca"] {
        let r = json(&mpkforge(
            dir.path(),
            &["run", "-m", "a.mtx", "-n", "3", "-p", "4", "--algo", algo, "--cache", "8MiB", "--x", "rand:42", "--verify", "oracle"],
        ));
        for key in [
            "algo",
            "n_ranks",
            "p_m",
            "exchanges",
            "setup_exchanges",
            "exchanged_doubles",
            "owned_row_updates",
            "redundant_row_updates",
            "o_mpi",
            "o_dlb",
            "checksum_per_power",
            "verify",
            "timing",
            "manifest",
        ] {
            assert!(r.get(key).is_some(), "{algo}: missing {key}");
        }
        assert_eq!(r["owned_row_updates"], 4 * 120);
        assert_eq!(r["verify"]["passed"], true);
        assert_eq!(r["manifest"]["seed"], 42);
        assert_eq!(r["manifest"]["inputs"]["a.mtx"].as_str().unwrap().len(), 64);
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    chain(dir.path());
    let code = |args: &[&str]| mpkforge(dir.path(), args).status.code().unwrap();
    assert_eq!(code(&["run", "-m", "chain.mtx", "-n", "2", "-p", "2", "--algo", "ca"]), 0);
    assert_eq!(code(&["run", "-m", "chain.mtx", "-n", "2", "-p", "2", "--algo", "ca", "--bogus"]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["run", "-m", "chain.mtx", "-n", "2", "-p", "2", "--algo", "dlb", "--cache", "12XB"]), 2);
    assert_eq!(code(&["run", "-m", "chain.mtx", "-n", "0", "-p", "2", "--algo", "dlb"]), 2);
    assert_eq!(code(&["run", "-m", "missing.mtx", "-n", "2", "-p", "2", "--algo", "dlb"]), 3);
    std::fs::write(dir.path().join("bad.mtx"), "not a matrix\n").unwrap();
    assert_eq!(code(&["stats", "-m", "bad.mtx"]), 2);
    let o = mpkforge(dir.path(), &["stats", "-m", "missing.mtx"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.mtx"));
}

#[test]
fn partition_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    mpkforge(dir.path(), &["gen", "--kind", "anderson", "--dims", "4,4,4", "--W", "2", "--seed", "3", "-o", "h.mtx"]);
    let p = json(&mpkforge(dir.path(), &["partition", "-m", "h.mtx", "-n", "3", "--strategy", "nnz", "-o", "part.txt"]));
    let rows: u64 = p["ranks"].as_array().unwrap().iter().map(|r| r["rows"].as_u64().unwrap()).sum();
    assert_eq!(rows, 64);
    let vector = std::fs::read_to_string(dir.path().join("part.txt")).unwrap();
    assert_eq!(vector.lines().count(), 64);
    let a = json(&mpkforge(dir.path(), &["analyze", "-m", "h.mtx", "-n", "3", "-p", "3", "--partfile", "part.txt", "--cache", "4KiB"]));
    assert_eq!(a["o_dlb"].as_array().unwrap().len(), 3);
    assert!(a["manifest"]["inputs"]["part.txt"].is_string());
    assert!(a["groups"].is_array());
    let bad = mpkforge(dir.path(), &["analyze", "-m", "h.mtx", "-n", "2", "-p", "3", "--partfile", "part.txt"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn roofline_and_traffic() {
    let dir = tempfile::tempdir().unwrap();
    let r = json(&mpkforge(dir.path(), &["roofline", "--bs", "241GB/s", "--nnzr", "73.7"]));
    assert!((r["gflops"].as_f64().unwrap() - 38.93).abs() < 0.005);
    chain(dir.path());
    let t = json(&mpkforge(dir.path(), &["traffic", "-m", "chain.mtx", "-n", "1", "-p", "3", "--cache", "64KiB", "--algo", "trad"]));
    assert_eq!(t["total"]["miss_bytes"], t["total"]["matrix_bytes"]);
}

#[test]
fn sweep_csv_grid() {
    let dir = tempfile::tempdir().unwrap();
    chain(dir.path());
    let o = mpkforge(
        dir.path(),
        &["sweep", "-m", "chain.mtx", "-n", "2", "-p", "1..3", "--cache", "64B,128B,...,512B", "--metric", "traffic", "-o", "grid.csv"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 4);
    assert!(csv.starts_with("p_m,cache_bytes,"));
}

#[test]
fn cheb_writes_series() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpkforge(
        dir.path(),
        &[
            "cheb", "--dims", "4,4,4", "--W", "1", "--seed", "2", "--order", "24", "--dt", "0.2", "--steps", "3", "--backend", "dlb", "-p", "4",
            "--cache", "16KiB", "--sigma", "1.5", "--density-stride", "1", "-o", "run",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("step,time,norm,com_x,com_y,com_z"));
    assert_eq!(csv.lines().count(), 5);
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
    assert!(meta["max_norm_drift"].as_f64().unwrap() < 1e-8);
    let density = std::fs::metadata(dir.path().join("run.density.bin")).unwrap().len();
    assert_eq!(density, 4 * 64 * 8);
}
