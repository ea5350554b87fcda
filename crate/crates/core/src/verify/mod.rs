//! Verifiers comparing exact finite-n laws and Monte Carlo ensembles with the limit laws.
//!
//! Exact laws are used wherever the functional allows; Monte Carlo appears only
//! for order statistics and counts along sampled partitions.

mod convergent;
mod dense;
mod dilute;
mod extended;
pub mod gof;

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::phase::{classify, PhaseReport};
use crate::weights::SchemeSpec;

pub use convergent::{verify_convergent, verify_mixture};
pub use dense::{verify_dense_extremes, verify_dense_llt, verify_prefix_independence};
pub use dilute::verify_dilute;
pub use extended::verify_extended;

pub const VERIFIERS: &[&str] = &[
    "dense_llt",
    "dense_extremes",
    "prefix_independence",
    "convergent",
    "mixture",
    "dilute",
    "extended",
];

/// Inputs shared by all verifiers. Unset tolerances fall back to per-verifier defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyParams {
    pub n_ladder: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub tol: Option<f64>,
    /// verifier-specific knobs, each echoed in the report
    pub options: BTreeMap<String, f64>,
}

impl VerifyParams {
    pub fn new(n_ladder: Vec<usize>) -> Self {
        Self {
            n_ladder,
            replicates: 1000,
            seed: 0,
            tol: None,
            options: BTreeMap::new(),
        }
    }

    pub fn with_replicates(mut self, r: usize) -> Self {
        self.replicates = r;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = Some(tol);
        self
    }

    pub fn with_option(mut self, key: &str, value: f64) -> Self {
        self.options.insert(key.to_string(), value);
        self
    }

    fn option(&self, key: &str, default: f64) -> f64 {
        self.options.get(key).copied().unwrap_or(default)
    }

    fn ladder(&self) -> Result<Vec<usize>> {
        let mut l = self.n_ladder.clone();
        if l.is_empty() || l.contains(&0) {
            return Err(Error::InvalidArgument(
                "n_ladder must be a nonempty list of positive sizes".into(),
            ));
        }
        l.sort_unstable();
        l.dedup();
        Ok(l)
    }

    fn n_max(&self) -> Result<usize> {
        Ok(*self.ladder()?.last().expect("nonempty"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// observed <= tolerance
    AtMost,
    /// observed >= tolerance
    AtLeast,
    /// observed > tolerance
    Above,
}

/// One criterion of a verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub metric: String,
    pub observed: f64,
    pub comparison: Comparison,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(
        name: &str,
        metric: &str,
        observed: f64,
        comparison: Comparison,
        tolerance: f64,
    ) -> Self {
        let pass = match comparison {
            Comparison::AtMost => observed <= tolerance,
            Comparison::AtLeast => observed >= tolerance,
            Comparison::Above => observed > tolerance,
        };
        Self {
            name: name.to_string(),
            metric: metric.to_string(),
            observed,
            comparison,
            tolerance,
            pass,
        }
    }

    /// A boolean criterion, recorded as 1 (held) or 0 against a threshold of 1.
    pub fn holds(name: &str, held: bool) -> Self {
        Self::new(
            name,
            "indicator",
            if held { 1.0 } else { 0.0 },
            Comparison::AtLeast,
            1.0,
        )
    }
}

/// A per-n table written as `<experiment>/<n>.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub n: usize,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(n: usize, header: &[&str]) -> Self {
        Self {
            n,
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }
}

/// Outcome of one experiment. The headline metric is `observed` along the
/// ladder; `pass` requires the headline at the largest n and every check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictReport {
    pub experiment: String,
    pub verifier: String,
    pub scheme: String,
    pub scheme_fingerprint: String,
    pub phase: String,
    pub n_values: Vec<usize>,
    pub metric: String,
    pub observed: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub trend_nonincreasing: bool,
    pub checks: Vec<Check>,
    pub params: VerifyParams,
    pub details: BTreeMap<String, Value>,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl VerdictReport {
    fn new(
        verifier: &str,
        scheme: &SchemeSpec,
        report: &PhaseReport,
        params: &VerifyParams,
    ) -> Self {
        Self {
            experiment: String::new(),
            verifier: verifier.to_string(),
            scheme: String::new(),
            scheme_fingerprint: fingerprint(scheme),
            phase: report.phase.to_string(),
            n_values: Vec::new(),
            metric: String::new(),
            observed: Vec::new(),
            tolerance: 0.0,
            pass: false,
            trend_nonincreasing: false,
            checks: Vec::new(),
            params: params.clone(),
            details: BTreeMap::new(),
            tables: Vec::new(),
        }
    }

    fn headline(&mut self, metric: &str, n_values: Vec<usize>, observed: Vec<f64>, tolerance: f64) {
        self.metric = metric.to_string();
        self.n_values = n_values;
        self.observed = observed;
        self.tolerance = tolerance;
    }

    fn detail<T: Serialize>(&mut self, key: &str, value: T) {
        self.details.insert(
            key.to_string(),
            serde_json::to_value(value).expect("serializable detail"),
        );
    }

    fn finish(mut self) -> Self {
        let last = self.observed.last().copied().unwrap_or(f64::NAN);
        self.trend_nonincreasing = nonincreasing(&self.observed);
        self.pass = last <= self.tolerance && self.checks.iter().all(|c| c.pass);
        self
    }

    /// Label the report with the experiment and scheme names used by a suite.
    pub fn labelled(mut self, experiment: &str, scheme: &str) -> Self {
        self.experiment = experiment.to_string();
        self.scheme = scheme.to_string();
        self
    }
}

pub fn nonincreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0])
}

pub fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

/// SHA-256 of the canonical JSON of the scheme, hex encoded.
pub fn fingerprint(scheme: &SchemeSpec) -> String {
    let json = serde_json::to_string(scheme).expect("scheme serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

/// Dispatch by verifier name.
pub fn run_verifier(
    name: &str,
    scheme: &SchemeSpec,
    params: &VerifyParams,
) -> Result<VerdictReport> {
    match name {
        "dense_llt" => verify_dense_llt(scheme, params),
        "dense_extremes" => verify_dense_extremes(scheme, params),
        "prefix_independence" => verify_prefix_independence(scheme, params),
        "convergent" => verify_convergent(scheme, params),
        "mixture" => verify_mixture(scheme, params),
        "dilute" => verify_dilute(scheme, params),
        "extended" => verify_extended(scheme, params),
        other => Err(Error::InvalidArgument(format!(
            "unknown verifier {other:?}; expected one of {}",
            VERIFIERS.join(", ")
        ))),
    }
}

fn classify_base(scheme: &SchemeSpec) -> PhaseReport {
    classify(&SchemeSpec {
        h: None,
        product_factors: None,
        ..scheme.clone()
    })
}

fn tol_or(params: &VerifyParams, default: f64) -> f64 {
    params.tol.unwrap_or(default)
}
