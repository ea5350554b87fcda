//! Dense phase: local limit theorem, extremes and prefix independence.

use crate::error::{Error, Result};
use crate::exact::{DiscreteLaw, Kolchin};
use crate::laws::{stable_density_series, FrechetLaw, StableParams};
use crate::numeric::poisson_pmf;
use crate::phase::{Phase, PhaseReport};
use crate::sampler::{replicate_rng, ExactSampler};
use crate::weights::SchemeSpec;

use super::gof::{chi_square, ks_statistic};
use super::{
    classify_base, strictly_decreasing, tol_or, Check, Comparison, Table, VerdictReport,
    VerifyParams,
};

/// Sup of `|s P(N_n = l) - h((l - n/mu) / s)|` over `l >= delta n` with `|x| <= halfwidth`.
pub(super) struct Llt {
    pub sup: f64,
    /// sup over the central bucket `|x| <= 0.1`
    pub central: f64,
    pub table: Table,
}

pub(super) fn llt_discrepancy(
    law: &DiscreteLaw,
    n: usize,
    report: &PhaseReport,
    delta: f64,
    halfwidth: f64,
) -> Result<Llt> {
    let (alpha, mu) = dense_constants(report)?;
    let s = report
        .fluctuation_scale(n)
        .expect("dense phases carry a scale");
    let h = StableParams::dense(alpha)?;
    let centre = n as f64 / mu;
    let lo = ((delta * n as f64).ceil() as usize)
        .max(((centre - halfwidth * s).ceil()).max(0.0) as usize);
    let hi = (centre + halfwidth * s).floor() as usize;
    let mut out = Llt {
        sup: 0.0,
        central: 0.0,
        table: Table::new(n, &["ell", "x", "scaled_pmf", "density", "abs_diff"]),
    };
    for l in lo..=hi {
        let x = (l as f64 - centre) / s;
        let scaled = s * law.prob(l);
        let dens = stable_density_series(&h, x)?;
        let diff = (scaled - dens).abs();
        out.sup = out.sup.max(diff);
        if x.abs() <= 0.1 {
            out.central = out.central.max(diff);
        }
        out.table.rows.push(vec![l as f64, x, scaled, dens, diff]);
    }
    Ok(out)
}

fn dense_constants(report: &PhaseReport) -> Result<(f64, f64)> {
    match (report.alpha, report.mu) {
        (Some(a), Some(m)) if report.scale_l.is_some() => Ok((a, m)),
        _ => Err(Error::InvalidArgument(format!(
            "phase {} carries no dense fluctuation constants",
            report.phase
        ))),
    }
}

/// `P(N_n = l | N_n >= n / (2 mu))`, zero below the threshold.
pub(super) fn condition_on_event(law: &DiscreteLaw, n: usize, mu: f64) -> (DiscreteLaw, f64) {
    let cut = event_threshold(n, mu);
    let p_event: f64 = law.pmf.iter().skip(cut).sum();
    let pmf = law
        .pmf
        .iter()
        .enumerate()
        .map(|(l, &p)| {
            if l >= cut && p_event > 0.0 {
                p / p_event
            } else {
                0.0
            }
        })
        .collect();
    (DiscreteLaw::new(pmf), p_event)
}

/// Smallest `l` with `l >= n / (2 mu)`.
pub(super) fn event_threshold(n: usize, mu: f64) -> usize {
    (n as f64 / (2.0 * mu)).ceil() as usize
}

/// Options: `delta` (default 0.1) and `halfwidth` (default 10, in units of `L(n) n^{1/alpha}`).
/// Mixture schemes are handled on the event `N_n >= n / (2 mu)`.
pub fn verify_dense_llt(scheme: &SchemeSpec, params: &VerifyParams) -> Result<VerdictReport> {
    let report = classify_base(scheme);
    report.require(
        "dense_llt",
        &[
            Phase::DenseCritical,
            Phase::DenseSupercritical,
            Phase::Mixture,
        ],
    )?;
    let (_, mu) = dense_constants(&report)?;
    let ladder = params.ladder()?;
    let tol = tol_or(params, 0.05);
    let delta = params.option("delta", 0.1);
    let halfwidth = params.option("halfwidth", 10.0);
    let kolchin = Kolchin::new(scheme, params.n_max()?)?;
    let mut v = VerdictReport::new("dense_llt", scheme, &report, params);
    let (mut sups, mut centrals) = (Vec::new(), Vec::new());
    for &n in &ladder {
        let mut law = kolchin.law_nn(n)?;
        if report.phase == Phase::Mixture {
            law = condition_on_event(&law, n, mu).0;
        }
        let llt = llt_discrepancy(&law, n, &report, delta, halfwidth)?;
        sups.push(llt.sup);
        centrals.push(llt.central);
        v.tables.push(llt.table);
    }
    v.checks.push(Check::holds(
        "central bucket below window sup",
        centrals.iter().zip(&sups).all(|(c, s)| c <= s),
    ));
    v.detail("central_bucket", &centrals);
    v.detail("conditioned_on_event", report.phase == Phase::Mixture);
    v.headline("sup-LLT-discrepancy", ladder, sups, tol);
    Ok(v.finish())
}

/// Largest sizes by Monte Carlo: Fréchet limit when `alpha < 2`, a shrinking
/// 0.9-quantile when `alpha = 2`, and the counts `#_{k_n}` at the largest n.
pub fn verify_dense_extremes(scheme: &SchemeSpec, params: &VerifyParams) -> Result<VerdictReport> {
    let report = classify_base(scheme);
    report.require(
        "dense_extremes",
        &[Phase::DenseCritical, Phase::DenseSupercritical],
    )?;
    let (alpha, mu) = dense_constants(&report)?;
    let ladder = params.ladder()?;
    let n_max = params.n_max()?;
    let reps = params.replicates.max(1);
    let tol = tol_or(params, 0.1);
    let kolchin = Kolchin::new(scheme, n_max)?;
    let mut v = VerdictReport::new("dense_extremes", scheme, &report, params);

    let mut largest: Vec<Vec<f64>> = Vec::new();
    let mut second: Vec<Vec<f64>> = Vec::new();
    let mut counts_rare = 0usize;
    let mut counts_poi: Vec<u64> = Vec::new();
    let lambda = |k: usize, n: usize| n as f64 / mu * kolchin.law_x.prob(k);
    // first k beyond the mode where the expected count drops below the threshold
    let first_below =
        |n: usize, thr: f64| (1..=n).find(|&k| lambda(k, n) <= thr && lambda(k, n) > 0.0);
    let k_rare = first_below(n_max, 1e-3);
    let k_poi = first_below(n_max, 1.0);

    for (i, &n) in ladder.iter().enumerate() {
        let sampler = ExactSampler::new(&kolchin, n)?;
        let s = report.fluctuation_scale(n).expect("dense scale");
        let (mut l1, mut l2) = (Vec::with_capacity(reps), Vec::with_capacity(reps));
        for r in 0..reps {
            let mut rng = replicate_rng(params.seed.wrapping_add(i as u64), r as u64);
            let draw = sampler.draw(&mut rng);
            let mut top = [0usize; 2];
            for &k in &draw.sizes {
                if k > top[0] {
                    top = [k, top[0]];
                } else if k > top[1] {
                    top[1] = k;
                }
            }
            l1.push(top[0] as f64 / s);
            l2.push(top[1] as f64 / s);
            if n == n_max {
                if let Some(k) = k_rare {
                    if !draw.sizes.contains(&k) {
                        counts_rare += 1;
                    }
                }
                if let Some(k) = k_poi {
                    let c = draw.sizes.iter().filter(|&&x| x == k).count();
                    if counts_poi.len() <= c {
                        counts_poi.resize(c + 1, 0);
                    }
                    counts_poi[c] += 1;
                }
            }
        }
        largest.push(l1);
        second.push(l2);
    }

    if alpha < 2.0 {
        let w1 = FrechetLaw::new(mu, alpha, 1)?;
        let w2 = FrechetLaw::new(mu, alpha, 2)?;
        let ks1: Vec<f64> = largest
            .iter()
            .map(|xs| ks_statistic(xs, |x| w1.cdf(x)))
            .collect();
        let ks2: Vec<f64> = second
            .iter()
            .map(|xs| ks_statistic(xs, |x| w2.cdf(x)))
            .collect();
        v.detail("ks_second_largest", &ks2);
        for (xs, &n) in largest.iter().zip(&ladder) {
            let mut sorted = xs.clone();
            sorted.sort_by(|a, b| a.total_cmp(b));
            let mut t = Table::new(n, &["normalized_largest", "empirical_cdf", "limit_cdf"]);
            for (j, &x) in sorted.iter().enumerate() {
                t.rows
                    .push(vec![x, (j + 1) as f64 / sorted.len() as f64, w1.cdf(x)]);
            }
            v.tables.push(t);
        }
        v.headline("KS", ladder.clone(), ks1, tol);
    } else {
        let q90: Vec<f64> = largest.iter().map(|xs| quantile(xs, 0.9)).collect();
        let rel: Vec<f64> = q90.iter().map(|q| q / q90[0]).collect();
        v.checks.push(Check::holds(
            "0.9-quantile strictly decreasing",
            strictly_decreasing(&q90),
        ));
        v.detail("quantile_0.9", &q90);
        for (xs, &n) in largest.iter().zip(&ladder) {
            let mut t = Table::new(n, &["quantile_level", "normalized_largest"]);
            for j in 1..20 {
                let p = j as f64 / 20.0;
                t.rows.push(vec![p, quantile(xs, p)]);
            }
            v.tables.push(t);
        }
        v.headline("quantile-ratio", ladder.clone(), rel, 1.0);
    }

    if let Some(k) = k_rare {
        let freq = counts_rare as f64 / reps as f64;
        v.detail("k_rare", k);
        v.detail("k_rare_expected_count", lambda(k, n_max));
        v.checks.push(Check::new(
            "count at k_n with vanishing mean is zero",
            "frequency",
            freq,
            Comparison::AtLeast,
            0.99,
        ));
    }
    if let Some(k) = k_poi {
        let lam = lambda(k, n_max);
        let probs: Vec<f64> = (0..counts_poi.len().max(1) + 8)
            .map(|j| poisson_pmf(j as u64, lam))
            .collect();
        let chi = chi_square(&counts_poi, &probs, 5.0);
        v.detail("k_poisson", k);
        v.detail("k_poisson_lambda", lam);
        v.detail("k_poisson_chi_square", chi.statistic);
        v.detail("k_poisson_dof", chi.dof);
        v.checks.push(Check::new(
            "count at k_n with unit mean is Poisson",
            "chi-square p-value",
            chi.p_value,
            Comparison::Above,
            1e-3,
        ));
    }
    Ok(v.finish())
}

/// Exact TV of the first one and two sizes against i.i.d. draws of `X`.
/// Accepts any phase; outside the dense phases it is expected to fail.
pub fn verify_prefix_independence(
    scheme: &SchemeSpec,
    params: &VerifyParams,
) -> Result<VerdictReport> {
    let report = classify_base(scheme);
    let ladder = params.ladder()?;
    let tol = tol_or(params, 0.05);
    let kolchin = Kolchin::new(scheme, params.n_max()?)?;
    let mut v = VerdictReport::new("prefix_independence", scheme, &report, params);
    let (mut tv1, mut tv2) = (Vec::new(), Vec::new());
    for &n in &ladder {
        let p1 = kolchin.prefix_law(n, 1)?;
        tv1.push(p1.tv);
        tv2.push(kolchin.prefix_law(n, 2)?.tv);
        let mut t = Table::new(n, &["k", "prob_first_size", "prob_x"]);
        for k in 0..=n {
            t.rows
                .push(vec![k as f64, p1.pmf[k], kolchin.law_x.prob(k)]);
        }
        v.tables.push(t);
    }
    v.checks.push(Check::holds(
        "TV strictly decreasing",
        strictly_decreasing(&tv1),
    ));
    v.checks.push(Check::holds(
        "two-coordinate TV dominates one-coordinate TV",
        tv1.iter().zip(&tv2).all(|(a, b)| *b >= *a - 1e-12),
    ));
    v.detail("tv_two_coordinates", &tv2);
    v.headline("TV", ladder, tv1, tol);
    Ok(v.finish())
}

pub(super) fn quantile(xs: &[f64], p: f64) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let idx = ((p * s.len() as f64).ceil() as usize).clamp(1, s.len()) - 1;
    s[idx]
}
