//! Suite configuration: named schemes and the experiments to run on them.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};
use gibbs_core::presets;
use gibbs_core::verify::{VerifyParams, VERIFIERS};
use gibbs_core::weights::DEFAULT_TOL;
use gibbs_core::{ClosedForm, SchemeSpec, SlowVarying, WeightSequence};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub schemes: BTreeMap<String, SchemeDecl>,
    #[serde(default)]
    pub experiments: Vec<ExperimentDecl>,
}

/// Either a bundled preset or explicit `v` and `w`; `h` and `product_factors` extend either.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeDecl {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub v: Option<WeightDecl>,
    #[serde(default)]
    pub w: Option<WeightDecl>,
    #[serde(default)]
    pub h: Option<WeightDecl>,
    #[serde(default)]
    pub product_factors: Option<Vec<WeightDecl>>,
}

// Numbers are read through plain structs: with arbitrary-precision JSON numbers,
// tagged and untagged enums cannot buffer them as f64.
#[derive(Debug, Clone, Deserialize)]
#[serde(try_from = "RawWeight")]
pub enum WeightDecl {
    /// `c log(2 + n)^log_exp n^{-e} rho^{-n}`
    ClosedForm {
        c: f64,
        log_exp: f64,
        e: f64,
        rho: RhoDecl,
        overrides: BTreeMap<String, f64>,
        start: Option<usize>,
        zero_term: Option<f64>,
    },
    Explicit {
        coeffs: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum WeightKind {
    ClosedForm,
    Explicit,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeight {
    kind: WeightKind,
    c: Option<f64>,
    log_exp: Option<f64>,
    e: Option<f64>,
    rho: Option<RhoDecl>,
    overrides: Option<BTreeMap<String, f64>>,
    start: Option<usize>,
    zero_term: Option<f64>,
    coeffs: Option<Vec<f64>>,
}

impl TryFrom<RawWeight> for WeightDecl {
    type Error = String;

    fn try_from(r: RawWeight) -> std::result::Result<Self, String> {
        match r.kind {
            WeightKind::Explicit => {
                let closed = r.c.is_some()
                    || r.log_exp.is_some()
                    || r.e.is_some()
                    || r.rho.is_some()
                    || r.overrides.is_some()
                    || r.start.is_some()
                    || r.zero_term.is_some();
                if closed {
                    return Err("explicit weights take only `coeffs`".into());
                }
                Ok(WeightDecl::Explicit {
                    coeffs: r.coeffs.ok_or("explicit weights need `coeffs`")?,
                })
            }
            WeightKind::ClosedForm => {
                if r.coeffs.is_some() {
                    return Err("closed-form weights do not take `coeffs`".into());
                }
                Ok(WeightDecl::ClosedForm {
                    c: r.c.ok_or("closed-form weights need `c`")?,
                    log_exp: r.log_exp.unwrap_or(0.0),
                    e: r.e.ok_or("closed-form weights need `e`")?,
                    rho: r.rho.ok_or("closed-form weights need `rho`")?,
                    overrides: r.overrides.unwrap_or_default(),
                    start: r.start,
                    zero_term: r.zero_term,
                })
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(try_from = "serde_json::Value")]
pub enum RhoDecl {
    Value(f64),
    /// `"critical"`: for `v`, the radius `W(rho_w)`
    Named(String),
}

impl TryFrom<serde_json::Value> for RhoDecl {
    type Error = String;

    fn try_from(v: serde_json::Value) -> std::result::Result<Self, String> {
        match v {
            serde_json::Value::Number(n) => n
                .as_f64()
                .map(RhoDecl::Value)
                .ok_or_else(|| format!("rho {n} is not a finite number")),
            serde_json::Value::String(s) => Ok(RhoDecl::Named(s)),
            other => Err(format!("rho must be a number or \"critical\", got {other}")),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentDecl {
    #[serde(default)]
    pub id: Option<String>,
    pub verifier: String,
    pub scheme: String,
    #[serde(default)]
    pub n_ladder: Option<Vec<usize>>,
    /// shorthand for the ladder `{n/4, n/2, n}`
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub replicates: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub options: BTreeMap<String, f64>,
    /// `false` marks a negative control that must fail
    #[serde(default = "yes")]
    pub expect_pass: bool,
}

fn yes() -> bool {
    true
}

/// A validated experiment ready to run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub id: String,
    pub verifier: String,
    pub scheme_name: String,
    pub scheme: SchemeSpec,
    pub params: VerifyParams,
    pub expect_pass: bool,
}

pub const DEFAULT_REPLICATES: usize = 1000;

impl SuiteConfig {
    /// Parse JSON, reporting the line and column of syntax and schema errors.
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| anyhow!("config line {} column {}: {e}", e.line(), e.column()))
    }

    pub fn resolve_schemes(&self) -> Result<BTreeMap<String, SchemeSpec>> {
        self.schemes
            .iter()
            .map(|(name, decl)| {
                Ok((
                    name.clone(),
                    decl.build().with_context(|| format!("scheme {name:?}"))?,
                ))
            })
            .collect()
    }

    /// Validate every experiment; seeds default to a hash of the suite seed and the experiment id.
    pub fn experiments(&self, seed_override: Option<u64>) -> Result<Vec<Experiment>> {
        let schemes = self.resolve_schemes()?;
        let base = seed_override.or(self.seed).unwrap_or(0);
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::new();
        for (i, e) in self.experiments.iter().enumerate() {
            let id =
                e.id.clone()
                    .unwrap_or_else(|| format!("{}_{}", e.verifier, e.scheme));
            let ctx = || format!("experiments[{i}] ({id})");
            if !seen.insert(id.clone()) {
                bail!("{}: duplicate experiment id", ctx());
            }
            if id.is_empty() || id.contains(['/', '\\']) || id.starts_with('.') {
                bail!(
                    "{}: experiment ids name output directories and must be plain names",
                    ctx()
                );
            }
            if !VERIFIERS.contains(&e.verifier.as_str()) {
                bail!(
                    "{}: unknown verifier {:?}, expected one of {}",
                    ctx(),
                    e.verifier,
                    VERIFIERS.join(", ")
                );
            }
            let scheme = match schemes.get(&e.scheme) {
                Some(s) => s.clone(),
                None => presets::by_name(&e.scheme).ok_or_else(|| {
                    anyhow!(
                        "{}: scheme {:?} is neither declared nor a preset",
                        ctx(),
                        e.scheme
                    )
                })?,
            };
            let ladder = match (&e.n_ladder, e.n) {
                (Some(l), None) => l.clone(),
                (None, Some(n)) => geometric_ladder(n),
                (Some(_), Some(_)) => bail!("{}: give either n_ladder or n, not both", ctx()),
                (None, None) => bail!("{}: missing n_ladder", ctx()),
            };
            if ladder.is_empty() || ladder.contains(&0) {
                bail!("{}: n_ladder must hold positive sizes", ctx());
            }
            if let Some(t) = e.tol {
                if !(t >= 0.0 && t.is_finite()) {
                    bail!("{}: tol must be a nonnegative number", ctx());
                }
            }
            let params = VerifyParams {
                n_ladder: ladder,
                replicates: e.replicates.unwrap_or(DEFAULT_REPLICATES),
                seed: e.seed.unwrap_or_else(|| derive_seed(base, &id)),
                tol: e.tol,
                options: e.options.clone(),
            };
            out.push(Experiment {
                id,
                verifier: e.verifier.clone(),
                scheme_name: e.scheme.clone(),
                scheme,
                params,
                expect_pass: e.expect_pass,
            });
        }
        Ok(out)
    }
}

/// `{n/4, n/2, n}` without duplicates or zeros.
pub fn geometric_ladder(n: usize) -> Vec<usize> {
    let mut l: Vec<usize> = [n / 4, n / 2, n].into_iter().filter(|&m| m > 0).collect();
    l.dedup();
    l
}

fn derive_seed(base: u64, id: &str) -> u64 {
    use sha2::{Digest, Sha256};
    let d = Sha256::digest(format!("{base}:{id}").as_bytes());
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

impl SchemeDecl {
    pub fn build(&self) -> Result<SchemeSpec> {
        let mut scheme = match (&self.preset, &self.v, &self.w) {
            (Some(p), None, None) => presets::by_name(p).ok_or_else(|| {
                anyhow!(
                    "unknown preset {p:?}, expected one of {}",
                    presets::NAMES.join(", ")
                )
            })?,
            (None, Some(v), Some(w)) => {
                let w = w.build(None)?;
                let v = v.build(Some(&w))?;
                SchemeSpec::new(v, w)?
            }
            (Some(_), _, _) => bail!("a preset cannot be combined with v or w"),
            _ => bail!("declare either a preset or both v and w"),
        };
        if let Some(h) = &self.h {
            scheme = scheme.with_prefactor(h.build(None)?);
        }
        if let Some(fs) = &self.product_factors {
            let fs = fs
                .iter()
                .map(|f| f.build(None))
                .collect::<Result<Vec<_>>>()?;
            scheme = scheme.with_product(fs);
        }
        Ok(scheme)
    }
}

impl WeightDecl {
    /// `inner` is the `w` sequence against which `"critical"` radii are resolved.
    pub fn build(&self, inner: Option<&WeightSequence>) -> Result<WeightSequence> {
        match self {
            WeightDecl::Explicit { coeffs } => Ok(WeightSequence::explicit(coeffs.clone())?),
            WeightDecl::ClosedForm {
                c,
                log_exp,
                e,
                rho,
                overrides,
                start,
                zero_term,
            } => {
                let rho = match rho {
                    RhoDecl::Value(r) => *r,
                    RhoDecl::Named(s) if s == "critical" => {
                        let w = inner
                            .ok_or_else(|| anyhow!("rho \"critical\" is only meaningful for v"))?;
                        let r = w.try_series_value(w.radius(), DEFAULT_TOL).map_err(|err| {
                            anyhow!("rho \"critical\" needs W to converge at its radius: {err}")
                        })?;
                        if !r.is_finite() {
                            bail!("rho \"critical\" needs a finite radius for w");
                        }
                        r
                    }
                    RhoDecl::Named(s) => bail!("rho must be a number or \"critical\", got {s:?}"),
                };
                let slow = if *log_exp == 0.0 {
                    SlowVarying::Constant(*c)
                } else {
                    SlowVarying::LogPower {
                        c: *c,
                        lambda: *log_exp,
                    }
                };
                let mut cf = ClosedForm::new(slow, *e, rho)?;
                if let Some(s) = start {
                    cf = cf.start_at(*s);
                }
                if let Some(z) = zero_term {
                    cf = cf.with_zero_term(*z)?;
                }
                for (k, val) in overrides {
                    let idx: usize = k
                        .parse()
                        .map_err(|_| anyhow!("override index {k:?} is not an integer"))?;
                    cf = cf.with_override(idx, *val)?;
                }
                Ok(cf.into())
            }
        }
    }
}
