use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::sum::sum;
use crate::phase::classify;
use crate::weights::{SchemeSpec, WeightSequence, DEFAULT_TOL};

use super::kolchin::Kolchin;
use super::law::DiscreteLaw;

const EXP_EQ: f64 = 1e-12;

pub(crate) fn convolve(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    (0..=n)
        .map(|m| {
            sum((0..=m)
                .map(|i| a.get(i).copied().unwrap_or(0.0) * b.get(m - i).copied().unwrap_or(0.0)))
        })
        .collect()
}

/// `(P_1, ..., P_l) = (A_1, ..., A_l | A_1 + ... + A_l = n)` with
/// `P(A_k = j) = w^(k)_j rho^j / W_k(rho)`.
#[derive(Debug, Clone)]
pub struct ProductLaw {
    pub rho: f64,
    pub n: usize,
    pub factor_laws: Vec<DiscreteLaw>,
    /// `suffix[k]` is the law of `A_k + ... + A_l` on `0..=n`; `suffix[l]` is the point mass at 0.
    pub suffix: Vec<Vec<f64>>,
    /// `P(P_k = j)`
    pub marginals: Vec<DiscreteLaw>,
    /// limiting probability that coordinate `k` carries the giant part
    pub limit_p: Option<Vec<f64>>,
}

impl ProductLaw {
    pub fn new(factors: &[WeightSequence], n: usize) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument(
                "a product needs at least one factor".into(),
            ));
        }
        let rho = factors
            .iter()
            .map(|w| w.radius())
            .fold(f64::INFINITY, f64::min);
        if !rho.is_finite() {
            return Err(Error::InvalidArgument(
                "product factors need a finite common radius".into(),
            ));
        }
        let totals = factors
            .iter()
            .map(|w| w.try_series_value(rho, DEFAULT_TOL))
            .collect::<Result<Vec<_>>>()?;
        let factor_laws: Vec<DiscreteLaw> = factors
            .iter()
            .zip(&totals)
            .map(|(w, t)| DiscreteLaw::new((0..=n).map(|j| w.scaled_term(j, rho) / t).collect()))
            .collect();
        let l = factors.len();
        let mut suffix = vec![Vec::new(); l + 1];
        let mut delta = vec![0.0; n + 1];
        delta[0] = 1.0;
        suffix[l] = delta.clone();
        for k in (0..l).rev() {
            suffix[k] = convolve(&factor_laws[k].pmf, &suffix[k + 1], n);
        }
        let total = suffix[0][n];
        if !(total > 0.0) {
            return Err(Error::ZeroPartitionFunction(n));
        }
        let mut prefix = delta;
        let mut marginals = Vec::with_capacity(l);
        for k in 0..l {
            let others = convolve(&prefix, &suffix[k + 1], n);
            marginals.push(DiscreteLaw::new(
                (0..=n)
                    .map(|j| factor_laws[k].prob(j) * others[n - j] / total)
                    .collect(),
            ));
            prefix = convolve(&prefix, &factor_laws[k].pmf, n);
        }
        Ok(Self {
            rho,
            n,
            factor_laws,
            suffix,
            marginals,
            limit_p: limit_p(factors, rho, &totals),
        })
    }
}

/// `p_k ∝ c_k / W_k(rho)` over the factors with the heaviest tail at the common radius.
fn limit_p(factors: &[WeightSequence], rho: f64, totals: &[f64]) -> Option<Vec<f64>> {
    let forms = factors
        .iter()
        .map(|w| w.closed_form())
        .collect::<Option<Vec<_>>>()?;
    if forms.iter().any(|cf| cf.exponent <= 1.0) {
        return None;
    }
    let at_rho = |k: usize| (forms[k].rho - rho).abs() <= EXP_EQ * rho;
    let heaviest = (0..forms.len())
        .filter(|&k| at_rho(k))
        .map(|k| (forms[k].exponent, -forms[k].slow.log_exponent()))
        .fold(
            (f64::INFINITY, f64::INFINITY),
            |a, b| if b < a { b } else { a },
        );
    let weights: Vec<f64> = (0..forms.len())
        .map(|k| {
            let dominant = at_rho(k)
                && (forms[k].exponent - heaviest.0).abs() <= EXP_EQ
                && (-forms[k].slow.log_exponent() - heaviest.1).abs() <= EXP_EQ;
            if dominant {
                forms[k].slow.coefficient() / totals[k]
            } else {
                0.0
            }
        })
        .collect();
    let z: f64 = weights.iter().sum();
    Some(weights.iter().map(|w| w / z).collect())
}

/// How `h_n` compares to `u_n` in an extended scheme `H(z) V(W(z))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum ExtendedRegime {
    /// `h_n / u_n -> 0`: the composition part carries the mass
    Negligible,
    /// `h_n / u_n -> inf`: the prefactor carries the mass
    Dominant,
    /// `h_n / u_n -> q`
    Balanced { q: f64 },
}

/// Decide the regime from the closed forms of `h` and of the asymptotics of `u_n`.
pub fn extended_regime(scheme: &SchemeSpec) -> Result<ExtendedRegime> {
    let h = scheme
        .h
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("scheme has no prefactor H".into()))?;
    let report = classify(&SchemeSpec {
        h: None,
        product_factors: None,
        ..scheme.clone()
    });
    let Some(hc) = h.closed_form() else {
        // a polynomial H is negligible against any u_n with infinitely many terms
        return Ok(ExtendedRegime::Negligible);
    };
    let u = report.u_asymptotic.ok_or_else(|| {
        Error::InvalidArgument(format!("no asymptotics for u_n in phase {}", report.phase))
    })?;
    if hc.rho > u.rho * (1.0 + EXP_EQ) {
        return Ok(ExtendedRegime::Negligible);
    }
    if hc.rho < u.rho * (1.0 - EXP_EQ) {
        return Ok(ExtendedRegime::Dominant);
    }
    let (eh, lh) = (hc.exponent, hc.slow.log_exponent());
    let (eu, lu) = (u.exponent, u.log_exponent);
    Ok(
        if eh > eu + EXP_EQ || ((eh - eu).abs() <= EXP_EQ && lh < lu) {
            ExtendedRegime::Negligible
        } else if eh < eu - EXP_EQ || lh > lu {
            ExtendedRegime::Dominant
        } else {
            ExtendedRegime::Balanced {
                q: hc.slow.coefficient() / u.coeff,
            }
        },
    )
}

/// Exact laws of an extended scheme `H(z) V(W(z))` at size `n`.
#[derive(Debug, Clone)]
pub struct ExtendedLaw {
    pub n: usize,
    pub rho: f64,
    /// `H(rho)`
    pub h_rho: f64,
    /// `U(rho) = V(W(rho))`
    pub u_rho: f64,
    /// size of the part built by `H`
    pub h_part: DiscreteLaw,
    /// number of components `N~_n` of the composition part
    pub components: DiscreteLaw,
    /// `P(N = l)`, the limit of `N~_n` when `H` dominates
    pub boltzmann_n: DiscreteLaw,
    /// `h_j rho^j / H(rho)`, the limit of the `H` part when it is negligible
    pub boltzmann_h: DiscreteLaw,
    /// `u_m rho^m / U(rho)`, the limit of the composition part when `H` dominates
    pub boltzmann_u: DiscreteLaw,
    pub kolchin: Kolchin,
}

impl ExtendedLaw {
    pub fn new(scheme: &SchemeSpec, n: usize) -> Result<Self> {
        let h = scheme
            .h
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("scheme has no prefactor H".into()))?;
        let base = SchemeSpec {
            h: None,
            product_factors: None,
            ..scheme.clone()
        };
        let rho = super::kolchin::kolchin_rho(&base, n)?.min(h.radius());
        let kolchin = Kolchin::with_rho(&base, rho, n)?;
        let h_rho = h.try_series_value(rho, DEFAULT_TOL)?;
        let a: Vec<f64> = (0..=n).map(|j| h.scaled_term(j, rho)).collect();
        // u_m rho^m = V(W(rho)) P(S_N = m)
        let b: Vec<f64> = kolchin.stopped.iter().map(|s| kolchin.v_w * s).collect();
        let total = sum((0..=n).map(|j| a[j] * b[n - j]));
        if !(total > 0.0) {
            return Err(Error::ZeroPartitionFunction(n));
        }
        let h_part = DiscreteLaw::new((0..=n).map(|j| a[j] * b[n - j] / total).collect());
        let ell_max = kolchin.table.ell_max().min(kolchin.law_n.len() - 1);
        let components = DiscreteLaw::new(
            (0..=ell_max)
                .map(|l| {
                    let pl = kolchin.law_n.prob(l);
                    if pl == 0.0 {
                        return 0.0;
                    }
                    let s = sum((0..=n).map(|m| a[n - m] * kolchin.table.get(l, m)));
                    kolchin.v_w * pl * s / total
                })
                .collect(),
        );
        Ok(Self {
            n,
            rho,
            h_rho,
            u_rho: kolchin.v_w,
            h_part,
            components,
            boltzmann_n: kolchin.law_n.clone(),
            boltzmann_h: DiscreteLaw::new(a.iter().map(|x| x / h_rho).collect()),
            boltzmann_u: DiscreteLaw::new(kolchin.stopped.clone()),
            kolchin,
        })
    }

    /// `P(H part >= n/2)`.
    pub fn prob_h_giant(&self) -> f64 {
        sum(self
            .h_part
            .pmf
            .iter()
            .enumerate()
            .filter(|(j, _)| 2 * j >= self.n)
            .map(|(_, &p)| p))
    }

    /// Limit of [`prob_h_giant`](Self::prob_h_giant) when `h_n ~ q u_n`: `q U(rho) / (q U(rho) + H(rho))`.
    pub fn balanced_limit(&self, q: f64) -> f64 {
        q * self.u_rho / (q * self.u_rho + self.h_rho)
    }
}
