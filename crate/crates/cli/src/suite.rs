//! Running a suite of experiments and writing its reports.

use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use gibbs_core::verify::run_verifier;
use gibbs_core::Error;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{Experiment, SuiteConfig};
use crate::output::{write_json, write_table};

pub const PAPER_PHASES: &str = include_str!("../suites/paper-phases.json");

/// Exit status of a suite run.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub exit_code: i32,
    pub verdicts: Vec<Value>,
}

pub fn bundled_suite(name: &str) -> Option<&'static str> {
    match name {
        "paper-phases" => Some(PAPER_PHASES),
        _ => None,
    }
}

/// Run every experiment of `config`, writing `verdicts.json`, `timings.json`
/// and `<experiment>/<n>.csv` under `out_dir`.
pub fn run_suite(
    config: &SuiteConfig,
    out_dir: &Path,
    seed: Option<u64>,
    threads: Option<usize>,
) -> Result<SuiteOutcome> {
    let experiments = config.experiments(seed)?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder.build().context("building the worker pool")?;
    let results: Vec<(Value, f64, Vec<gibbs_core::verify::Table>)> =
        pool.install(|| experiments.par_iter().map(run_one).collect());

    let mut verdicts = Vec::with_capacity(results.len());
    let mut timings = Map::new();
    let mut any_error = false;
    let mut all_expected = true;
    for ((verdict, secs, tables), exp) in results.into_iter().zip(&experiments) {
        any_error |= verdict.get("error").is_some();
        all_expected &= verdict["as_expected"] == Value::Bool(true);
        timings.insert(exp.id.clone(), json!(secs));
        if !tables.is_empty() {
            let dir = out_dir.join(&exp.id);
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            for t in &tables {
                write_table(&dir.join(format!("{}.csv", t.n)), t)?;
            }
        }
        verdicts.push(verdict);
    }
    write_json(&out_dir.join("verdicts.json"), &verdicts)?;
    write_json(&out_dir.join("timings.json"), &timings)?;
    let exit_code = if any_error {
        EXIT_ERROR
    } else if all_expected {
        EXIT_PASS
    } else {
        EXIT_FAIL
    };
    Ok(SuiteOutcome {
        exit_code,
        verdicts,
    })
}

fn run_one(exp: &Experiment) -> (Value, f64, Vec<gibbs_core::verify::Table>) {
    let start = Instant::now();
    let result = run_verifier(&exp.verifier, &exp.scheme, &exp.params);
    let secs = start.elapsed().as_secs_f64();
    match result {
        Ok(report) => {
            let report = report.labelled(&exp.id, &exp.scheme_name);
            let tables = report.tables.clone();
            let mut v = serde_json::to_value(&report).expect("report serializes");
            let obj = v.as_object_mut().expect("report is an object");
            obj.insert("expect_pass".into(), json!(exp.expect_pass));
            obj.insert("as_expected".into(), json!(report.pass == exp.expect_pass));
            (v, secs, tables)
        }
        Err(e) => {
            let v = json!({
                "experiment": exp.id,
                "verifier": exp.verifier,
                "scheme": exp.scheme_name,
                "error": {"kind": error_kind(&e), "message": e.to_string()},
                "pass": false,
                "expect_pass": exp.expect_pass,
                "as_expected": false,
            });
            (v, secs, Vec::new())
        }
    }
}

pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidWeights(_) => "invalid_weights",
        Error::InvalidArgument(_) => "invalid_argument",
        Error::Divergent { .. } => "divergent",
        Error::NonzeroConstantTerm(_) => "nonzero_constant_term",
        Error::ZeroPartitionFunction(_) => "zero_partition_function",
        Error::UncertifiableTail { .. } => "uncertifiable_tail",
        Error::Quadrature(_) => "quadrature",
        Error::RootFinding(_) => "root_finding",
        Error::Budget(_) => "budget",
        Error::PhaseMismatch { .. } => "phase_mismatch",
        Error::AttemptCap { .. } => "attempt_cap",
    }
}
