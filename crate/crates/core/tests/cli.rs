//! The `gmn` binary: exit codes, error documents and reproducible artifacts.

use std::path::PathBuf;
use std::process::Command;

fn gmn(args: &[&str], threads: &str) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_gmn")).args(args).env("GMN_THREADS", threads).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn scratch(name: &str) -> PathBuf {
    let p = std::env::temp_dir().join(format!("gmn-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&p);
    p
}

#[test]
fn ks_pentagon_reports_identity() {
    let (code, out) = gmn(&["ks-pentagon", "--degree", "8"], "1");
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["result"]["identity"], true);
}

#[test]
fn bad_input_gives_error_document() {
    for args in [&["solve", "--R", "0"][..], &["solve", "--u", "nope"], &["frobnicate"], &["ov", "--model", "pentagon"]] {
        let (code, out) = gmn(args, "1");
        assert_eq!(code, 2, "{args:?}");
        let doc: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
        assert_eq!(doc["schema"], 1);
        assert!(doc["error"]["message"].is_string());
    }
    let (code, out) = gmn(&["ks-pentagon"], "zero");
    assert_eq!(code, 2);
    assert!(out.contains("GMN_THREADS"));
}

#[test]
fn missing_config_file_is_reported() {
    let (code, out) = gmn(&["solve", "--config", "/nonexistent/gmn.toml"], "1");
    assert_eq!(code, 2);
    assert!(out.contains("\"kind\":\"config\""));
}

#[test]
fn artifacts_are_byte_identical_across_runs_and_thread_counts() {
    let cfg = scratch("cfg.toml");
    std::fs::write(&cfg, "model = \"ov\"\nu = [0.3, 0.2]\nr = 1.5\nzeta_phases = 16\nplots = true\n").unwrap();
    let dirs = [scratch("a"), scratch("b")];
    let mut stdout = Vec::new();
    for (d, threads) in dirs.iter().zip(["1", "3"]) {
        let (code, out) = gmn(&["solve", "--config", cfg.to_str().unwrap(), "--out", d.to_str().unwrap()], threads);
        assert_eq!(code, 0);
        stdout.push(out.replace(d.to_str().unwrap(), "OUT"));
    }
    assert_eq!(stdout[0], stdout[1]);
    let names = ["x_values.csv", "abs_xm_vs_phase.svg", "log_abs_xm_heatmap.svg"];
    for n in names {
        let a = std::fs::read(dirs[0].join(n)).unwrap();
        let b = std::fs::read(dirs[1].join(n)).unwrap();
        assert_eq!(a, b, "{n}");
    }
    let csv = std::fs::read_to_string(dirs[0].join("x_values.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 16);
}

#[test]
fn jump_check_owns_its_threshold() {
    let (code, out) = gmn(&["jump-check", "--model", "ov", "--u", "0.3,0.2"], "2");
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["passed"], true);
}
