use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_carleman"));
    c.env_remove("WORKBENCH_THREADS");
    c
}

fn run(sub: &str, config: &str, dir: &Path, env: Option<(&str, &str)>) -> (i32, Value) {
    let cfg = dir.join("run.conf");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let mut cmd = bin();
    cmd.args([sub, "--config"]).arg(&cfg).arg("--out").arg(&out);
    if let Some((k, v)) = env {
        cmd.env(k, v);
    }
    let o: Output = cmd.output().unwrap();
    let report = std::fs::read_to_string(out.join("report.json")).unwrap();
    (o.status.code().unwrap(), serde_json::from_str(&report).unwrap())
}

#[test]
fn list_names_every_experiment() {
    let a = bin().arg("list").output().unwrap();
    let b = bin().arg("list").output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 9);
    for l in lines {
        assert!(l.contains("relation:"), "{l}");
    }
}

#[test]
fn empty_config_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, rep) = run("ledger", "# nothing\n", dir.path(), None);
    assert_eq!(code, 2);
    assert_eq!(rep["status"], "parse_error");
}

#[test]
fn unknown_key_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run("ledger", "r_max = 6\nlamda = 2\n", dir.path(), None);
    assert_eq!(code, 2);
}

#[test]
fn negative_lambda_names_the_precondition() {
    let dir = tempfile::tempdir().unwrap();
    let (code, rep) = run("ledger", "lambda = -1\n", dir.path(), None);
    assert_eq!(code, 3);
    assert_eq!(rep["status"], "validation_error");
    assert_eq!(rep["error"]["precondition"], "lambda");
}

#[test]
fn zero_threads_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (code, rep) = run("certify-weight", "weight = log\n", dir.path(), Some(("WORKBENCH_THREADS", "0")));
    assert_eq!(code, 3);
    assert_eq!(rep["error"]["precondition"], "WORKBENCH_THREADS");
}

#[test]
fn zero_field_ledger_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (code, rep) = run("ledger", "field = zero\nr_max = 6\nh = 0.05\nnum_times = 11\n", dir.path(), None);
    assert_eq!(code, 0, "{rep}");
    let l = &rep["results"]["ledgers"][0]["ledger"];
    for key in ["commutator_term", "psi_dt_term", "af_term", "rhs_source", "lhs", "rhs"] {
        assert_eq!(l[key].as_f64(), Some(0.0), "{key}");
    }
}

#[test]
fn certify_weight_writes_a_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let (code, rep) = run("certify-weight", "weight = log\nr_max = 10\nh = 1e-2\n", dir.path(), None);
    assert_eq!(code, 0);
    assert_eq!(rep["results"]["certificate"]["passed"], true);
    let csv = std::fs::read_to_string(dir.path().join("out/weight_profile.csv")).unwrap();
    assert!(csv.starts_with("r,phi,phi1,phi2,phi3,phi4\n"));
    assert!(!csv.contains('\r'));
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.conf");
    std::fs::write(&cfg, "r_max = 6\nh = 0.05\nnum_times = 11\nsuite_size = 2\nseed = 4\n").unwrap();
    let mut reports = Vec::new();
    for (tag, threads) in [("a", "1"), ("b", "3")] {
        let out = dir.path().join(tag);
        let status = bin()
            .args(["ledger", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .env("WORKBENCH_THREADS", threads)
            .output()
            .unwrap()
            .status;
        assert!(matches!(status.code(), Some(0 | 1)));
        reports.push(std::fs::read(out.join("report.json")).unwrap());
        assert!(out.join("metadata.json").exists());
    }
    assert_eq!(reports[0], reports[1]);
}
