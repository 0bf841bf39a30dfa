//! Verification suites: configuration, orchestration and reports.
//!
//! Checks run concurrently on a rayon pool (capped by `HQCALC_THREADS`) and are merged
//! back in registry order, so a report depends only on the seed and the configuration.

mod checks;
pub mod config;
pub mod report;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

pub use checks::{Outcome, INVARIANTS};
pub use config::{ResolvedInputs, Suite, SuiteConfig, ToleranceLadder};
pub use report::{CheckRecord, Report, Timing, SCHEMA};

use crate::error::{Error, Result};

pub const THREADS_ENV: &str = "HQCALC_THREADS";

/// Names, suites and identities of every registered check, in execution order.
pub fn registered_checks() -> Vec<(Suite, &'static str, &'static str)> {
    checks::REGISTRY.iter().map(|c| (c.suite, c.name, c.identity)).collect()
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// The random stream of one check.
pub(crate) fn check_rng(seed: u64, name: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(name.as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    ChaCha8Rng::seed_from_u64(u64::from_le_bytes(bytes))
}

/// Thread cap from `HQCALC_THREADS`; `None` leaves the choice to rayon.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Error::Config(format!("{THREADS_ENV}: {e}"))),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
    }
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "check panicked".into()
    }
}

fn run_check(ctx: &checks::Ctx, def: &checks::CheckDef) -> (CheckRecord, f64) {
    let start = Instant::now();
    let mut rng = check_rng(ctx.cfg.seed, def.name);
    let result = catch_unwind(AssertUnwindSafe(|| (def.run)(ctx, &mut rng)));
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let record = match result {
        Ok(Ok(out)) => CheckRecord {
            suite: def.suite,
            name: def.name.into(),
            identity: def.identity.into(),
            inputs_digest: sha256_hex(out.inputs.to_string().as_bytes()),
            residual: out.residual,
            tolerance: out.tolerance,
            pass: out.pass(),
            max_nodes: out.max_nodes,
            detail: out.detail.clone(),
        },
        Ok(Err(e)) => failed(def, format!("error: {e}")),
        Err(p) => failed(def, format!("panic: {}", panic_message(p))),
    };
    if !record.pass {
        log::warn!("check {} failed: {:?}", def.name, record.detail);
    }
    (record, elapsed)
}

fn failed(def: &checks::CheckDef, detail: String) -> CheckRecord {
    CheckRecord {
        suite: def.suite,
        name: def.name.into(),
        identity: def.identity.into(),
        inputs_digest: String::new(),
        residual: f64::NAN,
        tolerance: f64::NAN,
        pass: false,
        max_nodes: 0,
        detail: Some(detail),
    }
}

/// Runs the selected suites. Configuration problems are errors; failing checks are recorded.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Report> {
    let start = Instant::now();
    let inputs = cfg.resolve()?;
    let ctx = checks::Ctx::new(cfg, &inputs.operators, &inputs.functions)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut suites = cfg.suites.clone();
    suites.sort();
    suites.dedup();
    let selected: Vec<&checks::CheckDef> = checks::REGISTRY
        .iter()
        .filter(|c| suites.contains(&c.suite))
        .collect();
    let results: Vec<(CheckRecord, f64)> = pool.install(|| selected.par_iter().map(|d| run_check(&ctx, d)).collect());

    let mut timing = Timing::default();
    let mut records = Vec::with_capacity(results.len());
    for (record, ms) in results {
        timing.checks_ms.insert(record.name.clone(), ms);
        records.push(record);
    }
    timing.total_ms = start.elapsed().as_secs_f64() * 1e3;
    let passed = records.iter().filter(|r| r.pass).count();
    let failed = records.len() - passed;
    let config_digest = sha256_hex(
        serde_json::to_string(&(cfg, &inputs))
            .expect("config serializes")
            .as_bytes(),
    );
    Ok(Report {
        schema: SCHEMA,
        seed: cfg.seed,
        suites,
        config_digest,
        checks: records,
        passed,
        failed,
        pass: failed == 0,
        timing,
    })
}
