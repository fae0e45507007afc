use std::process::Command;

use geomest::checks::check;
use geomest::runner::{task_seed, CALIBRATION_SALT};
use geomest::{calibrate_checks, manifest, run, run_checks, HarnessError, Report, Suite, SuiteConfig};

fn small(samples: usize) -> SuiteConfig {
    SuiteConfig { sample_count: samples, calibration_samples: 6, ..SuiteConfig::default() }
}

fn strip_wall(mut r: Report) -> Report {
    r.summary.wall_ms = 0;
    r
}

#[test]
fn config_rejects_bad_values() {
    for text in [
        r#"{"sample_count": 0}"#,
        r#"{"slack": {"fitted": -0.1}}"#,
        r#"{"grids": {"torus": 4}}"#,
        r#"{"suite": "geometry"}"#,
        r#"{"unknown_field": 1}"#,
    ] {
        assert!(matches!(SuiteConfig::from_json(text), Err(HarnessError::Config(_))), "{text}");
    }
    let cfg = SuiteConfig::from_json(r#"{"suite": "riemann", "seed": 3}"#).unwrap();
    assert_eq!((cfg.suite, cfg.seed, cfg.sample_count), (Suite::Riemann, 3, 100));
}

#[test]
fn fitted_suites_need_constants() {
    let cfg = SuiteConfig { suite: Suite::Elliptic, ..small(1) };
    assert!(matches!(run(&cfg), Err(HarnessError::Config(_))));
    assert!(!Suite::Riemann.needs_constants());
    assert!(Suite::Transport.needs_constants());
}

#[test]
fn manifests_partition_all() {
    let all = manifest(Suite::All);
    let parts: usize = Suite::MODULES.iter().map(|s| manifest(*s).len()).sum();
    assert_eq!(all.len(), parts);
    let mut ids: Vec<_> = all.iter().map(|c| c.id).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), all.len());
    assert!(all.iter().all(|c| c.id.starts_with(c.suite.name())));
}

#[test]
fn task_seeds_separate_streams() {
    let a = task_seed(0, "x", 0, 0);
    assert_ne!(a, task_seed(0, "x", 1, 0));
    assert_ne!(a, task_seed(0, "y", 0, 0));
    assert_ne!(a, task_seed(1, "x", 0, 0));
    assert_ne!(a, task_seed(0, "x", 0, CALIBRATION_SALT));
    assert_eq!(a, task_seed(0, "x", 0, 0));
}

#[test]
fn reports_are_seed_deterministic() {
    let checks = manifest(Suite::Riemann);
    let a = strip_wall(run_checks(&checks, &small(3), None).unwrap());
    let b = strip_wall(run_checks(&checks, &small(3), None).unwrap());
    assert_eq!(a.to_json(), b.to_json());
    let other = SuiteConfig { seed: 1, ..small(3) };
    let c = strip_wall(run_checks(&checks, &other, None).unwrap());
    assert_ne!(a.to_json(), c.to_json());
}

#[test]
fn missing_constants_fail_fitted_records() {
    let checks = [check("transport.rectangle").unwrap()];
    let report = run_checks(&checks, &small(2), None).unwrap();
    assert!(!report.records.is_empty());
    assert!(report.records.iter().filter(|r| r.constant_provenance == "fitted").all(|r| !r.pass && r.diagnostic.is_some()));
}

#[test]
fn calibrated_constants_are_applied() {
    let checks = [check("transport.rectangle").unwrap()];
    let cfg = small(4);
    let constants = calibrate_checks(&checks, &cfg).unwrap();
    let c = constants.constants["ptrec_lmm"].value.unwrap();
    let report = run_checks(&checks, &cfg, Some(&constants)).unwrap();
    assert_eq!(report.constants_version, constants.version);
    for r in report.records.iter().filter(|r| r.lemma_id == "ptrec_lmm") {
        assert_eq!(r.constant_used, c);
        assert_eq!(r.constant_provenance, "fitted");
    }
}

#[test]
fn thread_count_does_not_change_reports() {
    let exe = env!("CARGO_BIN_EXE_geomest");
    let runs: Vec<String> = ["1", "3"]
        .iter()
        .map(|n| {
            let out = Command::new(exe).args(["run", "--suite", "riemann"]).env("GEOMEST_THREADS", n).output().unwrap();
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
            let r = Report::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
            strip_wall(r).to_json()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn cli_reports_errors_with_exit_code_2() {
    let exe = env!("CARGO_BIN_EXE_geomest");
    let out = Command::new(exe).args(["run", "--suite", "elliptic"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(exe).args(["run", "--suite", "riemann"]).env("GEOMEST_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(exe).args(["report", "--in", "/nonexistent/report.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
