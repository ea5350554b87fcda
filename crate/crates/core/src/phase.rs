//! Phase classification of composition schemes and the constants each phase needs.
//!
//! The decision is syntactic: it reads exponents, radii and slowly varying
//! factors off the closed forms and never guesses from numerics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{gamma, ln_gamma_signed};
use crate::weights::{SchemeSpec, WeightSequence, DEFAULT_TOL};

/// Relative tolerance for deciding `W(rho_w) = rho_v`.
pub const CRITICAL_RTOL: f64 = 1e-9;

/// Exponents closer than this are treated as equal.
const EXP_EQ: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    DenseCritical,
    DenseSupercritical,
    Convergent,
    Mixture,
    Dilute,
    Unclassified,
}

impl Phase {
    pub fn is_dense(self) -> bool {
        matches!(self, Phase::DenseCritical | Phase::DenseSupercritical)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::DenseCritical => "dense_critical",
            Phase::DenseSupercritical => "dense_supercritical",
            Phase::Convergent => "convergent",
            Phase::Mixture => "mixture",
            Phase::Dilute => "dilute",
            Phase::Unclassified => "unclassified",
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

/// Shape of a normalizing sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scale {
    Constant {
        value: f64,
    },
    /// `coeff * sqrt(log n)`
    SqrtLogN {
        coeff: f64,
    },
    /// `coeff * n^exponent`
    Power {
        coeff: f64,
        exponent: f64,
    },
}

impl Scale {
    pub fn eval(&self, n: f64) -> f64 {
        match *self {
            Scale::Constant { value } => value,
            Scale::SqrtLogN { coeff } => coeff * n.ln().sqrt(),
            Scale::Power { coeff, exponent } => coeff * n.powf(exponent),
        }
    }

    fn times(&self, c: f64) -> Scale {
        match *self {
            Scale::Constant { value } => Scale::Constant { value: value * c },
            Scale::SqrtLogN { coeff } => Scale::SqrtLogN { coeff: coeff * c },
            Scale::Power { coeff, exponent } => Scale::Power {
                coeff: coeff * c,
                exponent,
            },
        }
    }
}

/// `c n^{-exponent} rho^{-n}` asymptotics of the partition function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerAsymptotic {
    pub coeff: f64,
    pub exponent: f64,
    pub log_exponent: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseReport {
    pub phase: Phase,
    pub criticality: Criticality,
    pub alpha: Option<f64>,
    pub mu: Option<f64>,
    pub gamma: Option<f64>,
    pub rho_u: f64,
    /// `W(rho_u)`
    pub w_at_rho: f64,
    pub scale_g: Option<Scale>,
    #[serde(rename = "scale_L")]
    pub scale_l: Option<Scale>,
    pub mixture_p: Option<f64>,
    pub mixture_p_frac: Option<f64>,
    pub dilute_lambda: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c_w: Option<f64>,
    pub c_v: Option<f64>,
    /// `V'(W(rho_w))`
    pub v_prime: Option<f64>,
    pub convergent_condition: Option<String>,
    pub variance: Option<f64>,
    pub u_asymptotic: Option<PowerAsymptotic>,
    pub notes: Vec<String>,
}

impl PhaseReport {
    /// `L(n) n^{1/alpha}`, the fluctuation scale of `N_n` in the dense phases.
    pub fn fluctuation_scale(&self, n: usize) -> Option<f64> {
        let alpha = self.alpha?;
        let l = self.scale_l?;
        let x = n as f64;
        Some(l.eval(x) * x.powf(1.0 / alpha))
    }

    pub fn require(&self, verifier: &str, allowed: &[Phase]) -> Result<()> {
        if allowed.contains(&self.phase) {
            Ok(())
        } else {
            Err(Error::PhaseMismatch {
                verifier: verifier.to_string(),
                expected: allowed
                    .iter()
                    .map(|p| p.as_str())
                    .collect::<Vec<_>>()
                    .join("|"),
                found: self.phase.to_string(),
            })
        }
    }
}

/// Root of `W(t) = rho_v` in the supercritical case, otherwise `rho_w`.
pub fn solve_rho_u(scheme: &SchemeSpec) -> Result<f64> {
    let rho_w = scheme.w.radius();
    let rho_v = scheme.v.radius();
    let w_at = |t: f64| scheme.w.series_value(t, DEFAULT_TOL);
    let w_rho = if rho_w.is_finite() {
        w_at(rho_w)
    } else {
        f64::INFINITY
    };
    if w_rho.is_nan() {
        return Err(Error::RootFinding("W(rho_w) could not be bounded".into()));
    }
    if rho_v.is_infinite() || w_rho <= rho_v * (1.0 + CRITICAL_RTOL) {
        if rho_w.is_infinite() {
            return Err(Error::RootFinding(
                "both series are entire; rho_u is infinite".into(),
            ));
        }
        return Ok(rho_w);
    }
    let mut lo = 0.0;
    let mut hi = if rho_w.is_finite() { rho_w } else { 1.0 };
    while !rho_w.is_finite() && w_at(hi) < rho_v {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::RootFinding("W never reaches rho_v".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if w_at(mid) < rho_v {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `E[X]` for `P(X = k) ∝ w_k rho^k`.
pub fn mu_of(w: &WeightSequence, rho: f64) -> f64 {
    let total = w.series_value(rho, DEFAULT_TOL);
    w.weighted_moment(rho, 1, DEFAULT_TOL) / total
}

/// `(p, p / (1 + p))` for a mixture scheme.
pub fn mixture_p(scheme: &SchemeSpec) -> Result<(f64, f64)> {
    let report = classify(scheme);
    match (report.mixture_p, report.mixture_p_frac) {
        (Some(p), Some(f)) => Ok((p, f)),
        _ => Err(Error::PhaseMismatch {
            verifier: "mixture_p".into(),
            expected: "mixture".into(),
            found: report.phase.to_string(),
        }),
    }
}

fn eq(x: f64, y: f64) -> bool {
    (x - y).abs() <= EXP_EQ * (1.0 + x.abs())
}

/// Does `sum_l l^q L(l) l^{-b}` converge, with `L` a log power of exponent `lambda`?
fn moment_finite(b: f64, lambda: f64, q: f64) -> bool {
    let e = b - q;
    e > 1.0 + EXP_EQ || (eq(e, 1.0) && lambda < -1.0)
}

/// `E[N^q]` finiteness at a critical scheme, where `P(N = l) ∝ L_v(l) l^{-b}`.
pub fn classify(scheme: &SchemeSpec) -> PhaseReport {
    let mut report = PhaseReport {
        phase: Phase::Unclassified,
        criticality: Criticality::Subcritical,
        alpha: None,
        mu: None,
        gamma: None,
        rho_u: f64::NAN,
        w_at_rho: f64::NAN,
        scale_g: None,
        scale_l: None,
        mixture_p: None,
        mixture_p_frac: None,
        dilute_lambda: None,
        a: None,
        b: None,
        c_w: None,
        c_v: None,
        v_prime: None,
        convergent_condition: None,
        variance: None,
        u_asymptotic: None,
        notes: Vec::new(),
    };
    let vcf = scheme.v.closed_form();
    let wcf = scheme.w.closed_form();
    report.a = wcf.map(|c| c.exponent);
    report.b = vcf.map(|c| c.exponent);
    report.c_w = wcf.and_then(|c| c.slow.limit());
    report.c_v = vcf.and_then(|c| c.slow.limit());

    let rho_v = scheme.v.radius();
    let rho_w = scheme.w.radius();
    let w_rho_w = if rho_w.is_finite() {
        scheme.w.series_value(rho_w, DEFAULT_TOL)
    } else {
        f64::INFINITY
    };
    report.criticality = if rho_v.is_infinite() {
        if w_rho_w.is_infinite() {
            report.notes.push("V and W are both entire".into());
            return report;
        }
        Criticality::Subcritical
    } else if (w_rho_w - rho_v).abs() <= CRITICAL_RTOL * rho_v {
        Criticality::Critical
    } else if w_rho_w < rho_v {
        Criticality::Subcritical
    } else {
        Criticality::Supercritical
    };

    match solve_rho_u(scheme) {
        Ok(r) => report.rho_u = r,
        Err(e) => {
            report.notes.push(e.to_string());
            return report;
        }
    }
    report.w_at_rho = scheme.w.series_value(report.rho_u, DEFAULT_TOL);
    let mu = mu_of(&scheme.w, report.rho_u);
    if mu.is_finite() {
        report.mu = Some(mu);
    }
    let second = scheme.w.weighted_moment(report.rho_u, 2, DEFAULT_TOL) / report.w_at_rho;
    if second.is_finite() {
        report.variance = Some(second - mu * mu);
    }
    if w_rho_w.is_finite() && report.criticality != Criticality::Supercritical {
        let vp = scheme.v.derivative_value(w_rho_w, DEFAULT_TOL);
        if vp.is_finite() && vp > 0.0 {
            report.v_prime = Some(vp);
        }
    }

    match report.criticality {
        Criticality::Supercritical => classify_supercritical(scheme, &mut report),
        Criticality::Subcritical => classify_subcritical(scheme, &mut report),
        Criticality::Critical => classify_critical(scheme, &mut report),
    }
    report
}

fn classify_supercritical(scheme: &SchemeSpec, report: &mut PhaseReport) {
    let Some(v) = scheme.v.closed_form() else {
        report
            .notes
            .push("supercritical but v is not a closed form".into());
        return;
    };
    if v.exponent <= 1.0 {
        report.notes.push("dense case needs b > 1".into());
        return;
    }
    let g = scheme.w.support_gcd(1000);
    if g != 1 {
        report.notes.push(format!("gcd of the support of w is {g}"));
        return;
    }
    report.phase = Phase::DenseSupercritical;
    set_dense_constants(report, 2.0, None);
    if let (Some(c_v), Some(mu)) = (report.c_v, report.mu) {
        report.u_asymptotic = Some(PowerAsymptotic {
            coeff: c_v * mu.powf(v.exponent - 1.0),
            exponent: v.exponent,
            log_exponent: 0.0,
            rho: report.rho_u,
        });
    }
}

fn classify_subcritical(scheme: &SchemeSpec, report: &mut PhaseReport) {
    let Some(w) = scheme.w.closed_form() else {
        report
            .notes
            .push("subcritical but w is not a closed form".into());
        return;
    };
    if w.exponent <= 1.0 + EXP_EQ {
        report.notes.push("subexponentiality needs a > 1".into());
        return;
    }
    if report.v_prime.is_none() {
        report
            .notes
            .push("V'(W(rho_w)) is not finite and positive".into());
        return;
    }
    report.phase = Phase::Convergent;
    report.convergent_condition = Some("ii".into());
    set_convergent_asymptotic(report);
}

fn set_convergent_asymptotic(report: &mut PhaseReport) {
    if let (Some(vp), Some(c_w), Some(a)) = (report.v_prime, report.c_w, report.a) {
        report.u_asymptotic = Some(PowerAsymptotic {
            coeff: vp * c_w,
            exponent: a,
            log_exponent: 0.0,
            rho: report.rho_u,
        });
    }
}

fn classify_critical(scheme: &SchemeSpec, report: &mut PhaseReport) {
    let (Some(v), Some(w)) = (scheme.v.closed_form(), scheme.w.closed_form()) else {
        report
            .notes
            .push("critical classification needs closed forms for v and w".into());
        return;
    };
    let (a, b) = (w.exponent, v.exponent);
    let (lw, lv) = (w.slow.log_exponent(), v.slow.log_exponent());

    // dilute
    if a > 1.0 && a < 2.0 && b > 1.0 && b < 2.0 {
        let Some(c_w) = report.c_w else {
            report
                .notes
                .push("dilute case needs lim L_w(n) to exist".into());
            return;
        };
        let alpha = a - 1.0;
        let lambda =
            c_w * gamma(1.0 - alpha).expect("1 - alpha is not a pole") / (report.w_at_rho * alpha);
        report.phase = Phase::Dilute;
        report.alpha = Some(alpha);
        report.dilute_lambda = Some(lambda);
        report.gamma =
            Some((lambda * (std::f64::consts::FRAC_PI_2 * alpha).cos()).powf(1.0 / alpha));
        if let Some(c_v) = report.c_v {
            let moment = crate::laws::stable_moment(alpha, lambda, alpha * (b - 1.0));
            if let Ok(m) = moment {
                report.u_asymptotic = Some(PowerAsymptotic {
                    coeff: c_v * alpha * m,
                    exponent: 1.0 + alpha * (b - 1.0),
                    log_exponent: 0.0,
                    rho: report.rho_u,
                });
            }
        }
        return;
    }

    // dense, case i
    if a > 2.0 && b > 1.0 && (b < a - EXP_EQ || (eq(a, b) && lw < lv)) {
        report.phase = Phase::DenseCritical;
        let alpha = (a - 1.0).min(2.0);
        set_dense_constants(report, alpha, Some((a, lw)));
        if let (Some(c_v), Some(mu)) = (report.c_v, report.mu) {
            report.u_asymptotic = Some(PowerAsymptotic {
                coeff: c_v * mu.powf(b - 1.0),
                exponent: b,
                log_exponent: 0.0,
                rho: report.rho_u,
            });
        }
        return;
    }

    // mixture
    if eq(a, b) && a > 2.0 && eq(lv, lw) {
        let (Some(mu), Some(vp)) = (report.mu, report.v_prime) else {
            report.notes.push("mixture constants diverge".into());
            return;
        };
        let ratio = v.slow.coefficient() / w.slow.coefficient();
        let p = mu.powf(a - 1.0) / vp * ratio;
        report.phase = Phase::Mixture;
        report.mixture_p = Some(p);
        report.mixture_p_frac = Some(p / (1.0 + p));
        set_dense_constants(report, (a - 1.0).min(2.0), Some((a, lw)));
        if report.c_w.is_some() {
            set_convergent_asymptotic(report);
            if let Some(u) = report.u_asymptotic.as_mut() {
                u.coeff *= 1.0 + p;
            }
        }
        return;
    }

    // convergent, conditions i) to iv) in order
    if report.v_prime.is_none() {
        report
            .notes
            .push("V'(W(rho_w)) is not finite and positive".into());
        return;
    }
    let cond_i = b > 2.0 && a > 1.0 && (a < b - EXP_EQ || (eq(a, b) && lv < lw));
    // E[N^{1 + a + delta}] < inf for some delta > 0
    let cond_iii = a > 1.0 && b - (1.0 + a) > 1.0 + EXP_EQ;
    let cond_iv = report.c_w.is_some() && lw == 0.0 && a > 1.0 && {
        let iv_a = moment_finite(b, lv, 1.0 + a);
        let iv_b = a < 2.0;
        let iv_c = eq(a, 2.0) && (b > 2.0 + EXP_EQ || (eq(b, 2.0) && lv < -3.0));
        let iv_d = a > 2.0 && a < 3.0 && (b > a + EXP_EQ || (eq(a, b) && lv < 0.0));
        let iv_e = eq(a, 3.0) && (b > 3.0 + EXP_EQ || (eq(b, 3.0) && lv < 0.0));
        iv_a || iv_b || iv_c || iv_d || iv_e
    };
    let cond = if cond_i {
        Some("i")
    } else if cond_iii {
        Some("iii")
    } else if cond_iv {
        Some("iv")
    } else {
        None
    };
    match cond {
        Some(c) => {
            report.phase = Phase::Convergent;
            report.convergent_condition = Some(c.into());
            set_convergent_asymptotic(report);
        }
        None => report
            .notes
            .push(format!("no phase applies to a = {a}, b = {b}")),
    }
}

/// `alpha`, `gamma`, `g` and `L`. `tail` is `(a, lambda_w)` for critical schemes.
fn set_dense_constants(report: &mut PhaseReport, alpha: f64, tail: Option<(f64, f64)>) {
    report.alpha = Some(alpha);
    report.gamma = Some((-(std::f64::consts::FRAC_PI_2 * alpha).cos()).powf(1.0 / alpha));
    let Some(mu) = report.mu else {
        report.notes.push("mu diverges".into());
        return;
    };
    let g = if let Some(var) = report.variance {
        Some(Scale::Constant {
            value: (var / 2.0).sqrt(),
        })
    } else {
        match (tail, report.c_w) {
            (Some((_, 0.0)), Some(c_w)) => {
                let c = c_w / report.w_at_rho;
                if alpha < 2.0 {
                    let (lg, _) = ln_gamma_signed(1.0 - alpha).expect("1 - alpha is not a pole");
                    Some(Scale::Constant {
                        value: (c * lg.exp() / alpha).powf(1.0 / alpha),
                    })
                } else {
                    Some(Scale::SqrtLogN {
                        coeff: 0.5 * c.sqrt(),
                    })
                }
            }
            _ => {
                report
                    .notes
                    .push("no explicit scale for a log-power L_w with infinite variance".into());
                None
            }
        }
    };
    report.scale_g = g;
    report.scale_l = g.map(|g| g.times(mu.powf(-1.0 - 1.0 / alpha)));
}
