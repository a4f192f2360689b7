use std::path::Path;
use std::process::{Command, Output};

const ZONE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../zones/jalancourt.json");

fn gpcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpcert"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .env("GPCERT_THREADS", "2")
        .output()
        .expect("spawn gpcert")
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn certify_writes_reports_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = gpcert(&["certify", "--zone", ZONE, "--seed", "7", "--n-scenarios", "150", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path());
    assert_eq!(r["manifest"]["seed"], 7);
    assert_eq!(r["manifest"]["subcommand"], "certify");
    assert_eq!(r["manifest"]["timestamp"], 1_700_000_000u64);
    assert_eq!(r["report"]["n_scenarios"], 150);
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("# manifest: {"));
    assert_eq!(trace.lines().count(), 2 + 150);
}

#[test]
fn equal_flags_give_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = gpcert(&["certify", "--zone", ZONE, "--seed", "3", "--n-scenarios", "120", "--out", d.path().to_str().unwrap()]);
        assert!(o.status.success());
    }
    for f in ["report.json", "trace.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn lax_rule_without_residual_rarely_simulates() {
    let dir = tempfile::tempdir().unwrap();
    let o = gpcert(&[
        "certify",
        "--zone",
        ZONE,
        "--n-scenarios",
        "300",
        "--beta",
        "0.49",
        "--sigma-ru0",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let sims = report(dir.path())["report"]["sims_performed"].as_u64().unwrap();
    assert!(sims <= 10, "{sims}");
}

#[test]
fn repeats_add_a_spread_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = gpcert(&["certify", "--zone", ZONE, "--n-scenarios", "100", "--repeats", "3", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let r = report(dir.path());
    assert_eq!(r["repeats"]["seeds"], 3);
    assert!(r["repeats"]["p_failure_std"].as_f64().unwrap() >= 0.0);
}

#[test]
fn baselines_default_to_ten_per_unit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = gpcert(&["baseline", "--zone", ZONE, "--method", "lhs", "--n-scenarios", "200", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path());
    assert_eq!(r["manifest"]["n_prior"], 130);
    assert_eq!(r["report"]["sims_performed"], 130);
    assert_eq!(r["report"]["method"], "lhs");

    let o = gpcert(&[
        "baseline", "--zone", ZONE, "--method", "bayesian", "--n-prior", "15", "--pool-size", "64", "--n-scenarios", "100", "--out", out,
    ]);
    assert!(o.status.success());
    let r = report(dir.path());
    assert_eq!(r["report"]["method"], "bayesian");
    assert_eq!(r["report"]["sims_performed"], 15);
    assert_eq!(r["manifest"]["pool_size"], 64);
}

#[test]
fn figure_five_extrapolates_linearly() {
    let dir = tempfile::tempdir().unwrap();
    let o = gpcert(&["figure-data", "--figure", "5", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("figure_5.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# manifest: "));
    assert_eq!(lines.next().unwrap(), "x,truth,prediction,ci_lo,ci_hi");
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[0], 1.2);
    assert!((last[2] - 1.2).abs() < 0.02, "{}", last[2]);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let missing = dir.path().join("missing.json");
    let bad_json = dir.path().join("bad.json");
    std::fs::write(&bad_json, "{ not json").unwrap();
    for args in [
        vec!["certify", "--zone", missing.to_str().unwrap(), "--out", out],
        vec!["certify", "--zone", bad_json.to_str().unwrap(), "--out", out],
        vec!["certify", "--zone", ZONE, "--beta", "0.6", "--out", out],
        vec!["certify", "--zone", ZONE, "--alpha", "1.0", "--out", out],
        vec!["certify", "--zone", ZONE, "--counter-mode", "weekly", "--out", out],
        vec!["baseline", "--zone", ZONE, "--method", "lhs", "--n-prior", "0", "--out", out],
        vec!["figure-data", "--figure", "7", "--out", out],
    ] {
        let o = gpcert(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(!dir.path().join("report.json").exists());
}
