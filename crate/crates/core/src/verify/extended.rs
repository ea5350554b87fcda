//! Extended schemes `H(z) V(W(z))` and products of several weight sequences.

use crate::error::{Error, Result};
use crate::exact::{
    convolve, extended_regime, DiscreteLaw, ExtendedLaw, ExtendedRegime, ProductLaw,
};
use crate::sampler::{replicate_rng, sample_product};
use crate::weights::SchemeSpec;

use super::{classify_base, tol_or, Check, Comparison, Table, VerdictReport, VerifyParams};

/// Dispatches on the structure of the scheme: a prefactor `H` or product factors.
pub fn verify_extended(scheme: &SchemeSpec, params: &VerifyParams) -> Result<VerdictReport> {
    match (&scheme.h, &scheme.product_factors) {
        (Some(_), _) => verify_prefactor(scheme, params),
        (None, Some(_)) => verify_product(scheme, params),
        (None, None) => Err(Error::InvalidArgument(
            "extended verifier needs a scheme with a prefactor h or product factors".into(),
        )),
    }
}

fn verify_prefactor(scheme: &SchemeSpec, params: &VerifyParams) -> Result<VerdictReport> {
    let report = classify_base(scheme);
    let regime = extended_regime(scheme)?;
    let ladder = params.ladder()?;
    let tol = tol_or(params, 0.1);
    let mut v = VerdictReport::new("extended", scheme, &report, params);
    v.detail("regime", regime);
    let mut observed = Vec::new();
    let mut extra: Vec<Vec<f64>> = vec![Vec::new(); 2];
    for &n in &ladder {
        let law = ExtendedLaw::new(scheme, n)?;
        let mut t = Table::new(n, &["j", "prob_h_part", "prob_h_part_limit"]);
        match regime {
            ExtendedRegime::Negligible => {
                let tv_h = law.h_part.tv(&law.boltzmann_h);
                let tv_n = law.components.tv(&law.kolchin.law_nn(n)?);
                extra[0].push(tv_h);
                extra[1].push(tv_n);
                observed.push(tv_h.max(tv_n));
                for j in 0..=n {
                    t.rows
                        .push(vec![j as f64, law.h_part.prob(j), law.boltzmann_h.prob(j)]);
                }
            }
            ExtendedRegime::Dominant => {
                let tv_n = law.components.tv(&law.boltzmann_n);
                // the composition part has size n - (H part)
                let u_part = DiscreteLaw::new((0..=n).map(|m| law.h_part.prob(n - m)).collect());
                let tv_u = u_part.tv(&law.boltzmann_u);
                extra[0].push(tv_n);
                extra[1].push(tv_u);
                observed.push(tv_n.max(tv_u));
                for j in 0..=n {
                    t.rows.push(vec![
                        j as f64,
                        law.h_part.prob(j),
                        law.boltzmann_u.prob(n - j),
                    ]);
                }
            }
            ExtendedRegime::Balanced { q } => {
                let p = law.prob_h_giant();
                let limit = law.balanced_limit(q);
                extra[0].push(p);
                extra[1].push(limit);
                observed.push((p - limit).abs());
                v.detail("q_over_1_plus_q", q / (1.0 + q));
                v.detail("abs_error_q_over_1_plus_q", (p - q / (1.0 + q)).abs());
                for j in 0..=n {
                    t.rows.push(vec![j as f64, law.h_part.prob(j), f64::NAN]);
                }
            }
        }
        v.tables.push(t);
    }
    let (metric, names) = match regime {
        ExtendedRegime::Negligible => ("TV", ["tv_h_part", "tv_components_vs_base"]),
        ExtendedRegime::Dominant => (
            "TV",
            [
                "tv_components_vs_boltzmann",
                "tv_composition_part_vs_boltzmann",
            ],
        ),
        ExtendedRegime::Balanced { .. } => (
            "abs-error",
            ["prob_h_part_giant", "limit_prob_h_part_giant"],
        ),
    };
    v.detail(names[0], &extra[0]);
    v.detail(names[1], &extra[1]);
    v.headline(metric, ladder, observed, tol);
    Ok(v.finish())
}

/// Exact marginal TV of each coordinate against the one-giant limit, and the
/// empirical frequency of the giant coordinate against `p_k`.
fn verify_product(scheme: &SchemeSpec, params: &VerifyParams) -> Result<VerdictReport> {
    let report = classify_base(scheme);
    let factors = scheme.product_factors.as_ref().expect("checked by caller");
    let ladder = params.ladder()?;
    let tol = tol_or(params, 0.1);
    let mut v = VerdictReport::new("extended", scheme, &report, params);
    let mut observed = Vec::new();
    let mut last_law = None;
    for &n in &ladder {
        let law = ProductLaw::new(factors, n)?;
        let p = law.limit_p.clone().ok_or_else(|| {
            Error::InvalidArgument("no closed-form giant probabilities for these factors".into())
        })?;
        let mut worst: f64 = 0.0;
        let mut t = Table::new(n, &["j", "coordinate", "prob", "prob_limit"]);
        for (k, &p_k) in p.iter().enumerate().take(factors.len()) {
            let mut others = vec![0.0; n + 1];
            others[0] = 1.0;
            for (i, f) in law.factor_laws.iter().enumerate() {
                if i != k {
                    others = convolve(&others, &f.pmf, n);
                }
            }
            let limit: Vec<f64> = (0..=n)
                .map(|j| {
                    let small = if 2 * j < n {
                        (1.0 - p_k) * law.factor_laws[k].prob(j)
                    } else {
                        0.0
                    };
                    let giant = if 2 * (n - j) < n {
                        p_k * others[n - j]
                    } else {
                        0.0
                    };
                    small + giant
                })
                .collect();
            for (j, lim) in limit.iter().enumerate() {
                t.rows
                    .push(vec![j as f64, k as f64, law.marginals[k].prob(j), *lim]);
            }
            worst = worst.max(law.marginals[k].tv(&DiscreteLaw::new(limit)));
        }
        v.tables.push(t);
        observed.push(worst);
        last_law = Some(law);
    }
    let law = last_law.expect("nonempty ladder");
    let p = law.limit_p.clone().expect("checked above");
    v.detail("limit_p", &p);
    if params.replicates > 0 {
        let reps = params.replicates;
        let mut hits = vec![0u64; factors.len()];
        for r in 0..reps {
            let mut rng = replicate_rng(params.seed, r as u64);
            let draw = sample_product(&law, &mut rng);
            let mut best = 0;
            for (k, &a) in draw.iter().enumerate() {
                if a > draw[best] {
                    best = k;
                }
            }
            hits[best] += 1;
        }
        let freq: Vec<f64> = hits.iter().map(|&h| h as f64 / reps as f64).collect();
        v.detail("giant_frequency", &freq);
        v.detail("replicates", reps);
        if p.iter().all(|&x| x > 0.0 && x < 1.0) {
            let z = freq
                .iter()
                .zip(&p)
                .map(|(f, q)| (f - q).abs() / (q * (1.0 - q) / reps as f64).sqrt())
                .fold(0.0, f64::max);
            v.checks.push(Check::new(
                "giant coordinate frequency",
                "standard errors",
                z,
                Comparison::AtMost,
                2.0,
            ));
        } else {
            let err = freq
                .iter()
                .zip(&p)
                .map(|(f, q)| (f - q).abs())
                .fold(0.0, f64::max);
            v.checks.push(Check::new(
                "giant coordinate frequency",
                "abs-error",
                err,
                Comparison::AtMost,
                tol,
            ));
        }
    }
    v.headline("TV", ladder, observed, tol);
    Ok(v.finish())
}
