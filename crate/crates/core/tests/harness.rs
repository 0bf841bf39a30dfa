use std::fs;
use std::sync::{Mutex, MutexGuard};

use hqcalc_core::error::Error;
use hqcalc_core::harness::{registered_checks, run_suite, Suite, SuiteConfig, INVARIANTS, THREADS_ENV};

static ENV: Mutex<()> = Mutex::new(());

fn env_lock() -> MutexGuard<'static, ()> {
    ENV.lock().unwrap_or_else(|e| e.into_inner())
}

fn small(suites: Vec<Suite>) -> SuiteConfig {
    SuiteConfig {
        suites,
        resolvent_cases: 20,
        independence_cases: 3,
        random_operators: 3,
        ..SuiteConfig::default()
    }
}

#[test]
fn reports_are_reproducible_across_thread_counts() {
    let _env = env_lock();
    let cfg = small(vec![Suite::Resolvent, Suite::Rational]);
    std::env::set_var(THREADS_ENV, "1");
    let a = run_suite(&cfg).unwrap();
    std::env::set_var(THREADS_ENV, "3");
    let b = run_suite(&cfg).unwrap();
    std::env::set_var(THREADS_ENV, "zero");
    let bad = run_suite(&cfg);
    std::env::remove_var(THREADS_ENV);
    assert_eq!(a.to_json_canonical(), b.to_json_canonical());
    assert!(matches!(bad, Err(Error::Config(_))));

    let other_seed = run_suite(&SuiteConfig { seed: 43, ..cfg }).unwrap();
    assert_ne!(a.checks[0].inputs_digest, other_seed.checks[0].inputs_digest);
}

#[test]
fn each_selected_check_appears_once() {
    let _env = env_lock();
    let cfg = small(vec![Suite::Algebra, Suite::Resolvent]);
    let report = run_suite(&cfg).unwrap();
    let expected: Vec<&str> = registered_checks()
        .into_iter()
        .filter(|(s, _, _)| cfg.suites.contains(s))
        .map(|(_, n, _)| n)
        .collect();
    let got: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(got, expected);
    assert!(report.pass, "{}", report.to_json());
    assert_eq!(report.passed, expected.len());
}

#[test]
fn invariant_manifest_is_covered() {
    let _env = env_lock();
    let report = run_suite(&small(vec![Suite::Algebra])).unwrap();
    let coverage = report.checks.iter().find(|c| c.name == "harness.coverage").unwrap();
    assert!(coverage.pass);
    assert!(INVARIANTS.len() >= 30);
}

#[test]
fn configured_inputs_are_loaded_from_files() {
    let _env = env_lock();
    let dir = tempfile::tempdir().unwrap();
    let op = dir.path().join("op.json");
    let f = dir.path().join("f.json");
    fs::write(&op, r#"{"kind": "diagonal", "entries": [[2, 0, 0, 0]]}"#).unwrap();
    fs::write(&f, r#"{"kind": "rational", "p": [0, 0, 1], "q": [1, 3, 3, 1]}"#).unwrap();
    let cfg_path = dir.path().join("cfg.json");
    fs::write(
        &cfg_path,
        serde_json::json!({
            "seed": 5,
            "suites": ["rational"],
            "operator_files": [op],
            "function_files": [f],
            "random_operators": 2
        })
        .to_string(),
    )
    .unwrap();
    let cfg = SuiteConfig::from_file(&cfg_path).unwrap();
    let report = run_suite(&cfg).unwrap();
    assert!(report.pass, "{}", report.to_json());
    let oracle = report.checks.iter().find(|c| c.name == "calculus.rational_oracle").unwrap();
    assert!(oracle.residual <= 1e-7);

    let json_path = dir.path().join("report.json");
    let csv_path = dir.path().join("report.csv");
    report.write_json(&json_path).unwrap();
    report.write_csv(&csv_path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(v["schema"], "hqcalc-report/1");
    assert_eq!(v["checks"].as_array().unwrap().len(), report.checks.len());
    let csv = fs::read_to_string(&csv_path).unwrap();
    assert_eq!(csv.lines().count(), report.checks.len() + 1);
    assert!(csv.starts_with("suite,name,residual,tolerance,pass"));
}

#[test]
fn bad_configs_are_rejected() {
    let _env = env_lock();
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{ not json").unwrap();
    assert!(matches!(SuiteConfig::from_file(&broken), Err(Error::Config(_))));

    let mut cfg = SuiteConfig::default();
    cfg.tolerances.linear_algebra = -1.0;
    assert!(matches!(run_suite(&cfg), Err(Error::Config(_))));

    let bad_op = dir.path().join("op.json");
    fs::write(&bad_op, r#"{"kind": "poly_family", "M": [[1, 2], [0, 1]], "p": [[0, 1], [], [], []]}"#).unwrap();
    let cfg = SuiteConfig {
        operator_files: vec![bad_op],
        ..SuiteConfig::default()
    };
    assert!(matches!(run_suite(&cfg), Err(Error::Config(_))));
}
