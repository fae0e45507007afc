//! Deterministic parallel execution of checks.
//!
//! Every (check, sample) pair gets its own ChaCha8 stream seeded from the
//! suite seed, the check id and the sample index, so results do not depend
//! on the thread count or on scheduling.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use geomest_core::sobolev::{ConstantProvenance, InequalityRecord};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::checks::{manifest, Check, Ctx, Measured};
use crate::config::SuiteConfig;
use crate::constants::{calibration_date, Calibrator, ConstantsFile, Metadata, SAFETY_FACTOR};
use crate::report::{RecordEntry, Report};
use crate::{fnv1a, mix, HarnessError, Result};

/// Separates calibration streams from run streams of the same seed.
pub const CALIBRATION_SALT: u64 = 0x6361_6c69_6272_6174;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "GEOMEST_THREADS";

pub fn task_seed(seed: u64, check_id: &str, sample: usize, salt: u64) -> u64 {
    mix(mix(seed ^ fnv1a(check_id.as_bytes()) ^ salt).wrapping_add(sample as u64))
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| HarnessError::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| HarnessError::Config(format!("thread pool: {e}")))
}

struct Outcome {
    check: &'static Check,
    sample: usize,
    result: std::result::Result<Vec<Measured>, String>,
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "unknown panic payload".into()
    }
}

fn execute(checks: &[&'static Check], ctx: &Ctx, samples: usize, seed: u64, salt: u64) -> Result<Vec<Outcome>> {
    let tasks: Vec<(&'static Check, usize)> =
        checks.iter().flat_map(|&c| (0..samples).map(move |s| (c, s))).collect();
    let pool = thread_pool()?;
    Ok(pool.install(|| {
        tasks
            .par_iter()
            .map(|&(check, sample)| {
                let mut rng = ChaCha8Rng::seed_from_u64(task_seed(seed, check.id, sample, salt));
                let result = match catch_unwind(AssertUnwindSafe(|| (check.run)(ctx, &mut rng))) {
                    Ok(Ok(m)) => Ok(m),
                    Ok(Err(e)) => Err(format!("error: {e}")),
                    Err(p) => Err(format!("panic: {}", panic_message(p))),
                };
                Outcome { check, sample, result }
            })
            .collect()
    }))
}

fn failure(check: &Check, diagnostic: String) -> (InequalityRecord, Option<String>) {
    let provenance = if check.fitted { ConstantProvenance::Fitted } else { ConstantProvenance::Paper };
    let rec = InequalityRecord::new(check.lemma_id, f64::NAN, 0.0, 0.0, 0.0, provenance, 0.0);
    (rec, Some(diagnostic))
}

/// Runs `checks` with `cfg.sample_count` samples each. Fitted records take
/// their constants from `constants`; a missing constant fails the record.
pub fn run_checks(checks: &[&'static Check], cfg: &SuiteConfig, constants: Option<&ConstantsFile>) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let ctx = Ctx { grids: cfg.grids.clone() };
    let outcomes = execute(checks, &ctx, cfg.sample_count, cfg.seed, 0)?;
    let mut entries = Vec::new();
    for out in outcomes {
        let measured = match out.result {
            Ok(m) => m,
            Err(msg) => {
                let (rec, diag) = failure(out.check, msg);
                entries.push(RecordEntry::new(rec, out.check.id, out.sample, diag));
                continue;
            }
        };
        for m in measured {
            let (rec, diag) = match &m.key {
                None => (m.record.with_slack(cfg.slack.paper), None),
                Some(key) => {
                    let found = constants
                        .ok_or_else(|| "no constants file loaded".to_string())
                        .and_then(|c| c.lookup(key, &m.record.params));
                    match found {
                        Ok(c) => (m.record.with_constant(c, ConstantProvenance::Fitted).with_slack(cfg.slack.fitted), None),
                        Err(msg) => {
                            let mut rec = m.record.with_slack(cfg.slack.fitted);
                            rec.pass = false;
                            (rec, Some(msg))
                        }
                    }
                }
            };
            entries.push(RecordEntry::new(rec, out.check.id, out.sample, diag));
        }
    }
    entries.sort_by(|a, b| (&a.lemma_id, &a.check, a.sample).cmp(&(&b.lemma_id, &b.check, b.sample)));
    let version = constants.map_or_else(|| "none".to_string(), |c| c.version.clone());
    Ok(Report::new(version, entries, start.elapsed().as_millis() as u64))
}

/// Runs the configured suite, reading or calibrating constants as the
/// config asks.
pub fn run(cfg: &SuiteConfig) -> Result<Report> {
    let constants = if cfg.calibration {
        Some(calibrate(cfg)?)
    } else if let Some(path) = &cfg.constants {
        Some(ConstantsFile::load(path)?)
    } else if cfg.suite.needs_constants() {
        return Err(HarnessError::Config(format!(
            "suite {} uses fitted constants: set `constants` to a calibrated file or `calibration` to true",
            cfg.suite
        )));
    } else {
        None
    };
    run_checks(&manifest(cfg.suite), cfg, constants.as_ref())
}

/// Fits the constants of `checks` on `cfg.calibration_samples` samples
/// drawn from streams disjoint from those of [`run_checks`].
pub fn calibrate_checks(checks: &[&'static Check], cfg: &SuiteConfig) -> Result<ConstantsFile> {
    cfg.validate()?;
    let mut cal = Calibrator::new();
    let fitted: Vec<&'static Check> = checks.iter().copied().filter(|c| c.fitted).collect();
    for c in checks.iter().filter(|c| !c.fitted) {
        cal.mark_paper(c.lemma_id);
    }
    let ctx = Ctx { grids: cfg.grids.clone() };
    for out in execute(&fitted, &ctx, cfg.calibration_samples, cfg.seed, CALIBRATION_SALT)? {
        let measured = out.result.map_err(|msg| HarnessError::Calibration {
            check: out.check.id.to_string(),
            msg: format!("sample {}: {msg}", out.sample),
        })?;
        for m in measured {
            match &m.key {
                Some(key) => cal.observe(out.check.id, key, &m.record)?,
                None => cal.mark_paper(&m.record.lemma_id),
            }
        }
    }
    cal.finish(Metadata {
        seed: cfg.seed,
        calibration_samples: cfg.calibration_samples,
        safety_factor: SAFETY_FACTOR,
        grids: cfg.grids.clone(),
        date: calibration_date(),
        suites: checks.iter().map(|c| c.suite).collect(),
    })
}

pub fn calibrate(cfg: &SuiteConfig) -> Result<ConstantsFile> {
    calibrate_checks(&manifest(cfg.suite), cfg)
}
