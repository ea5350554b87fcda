//! Convergent and mixture phases: bounded number of components and a giant one.

use crate::error::Result;
use crate::exact::{DiscreteLaw, Kolchin};
use crate::phase::Phase;
use crate::sampler::{replicate_rng, ExactSampler};
use crate::weights::{SchemeSpec, DEFAULT_TOL};

use super::dense::{condition_on_event, event_threshold, llt_discrepancy};
use super::gof::chi_square;
use super::{
    classify_base, nonincreasing, tol_or, Check, Comparison, Table, VerdictReport, VerifyParams,
};

struct ConvergentTvs {
    components: f64,
    deficit: f64,
    deficit_upper: f64,
    deficit_mean: f64,
    table: Table,
}

/// TV of `N_n` against `N^` and of `n - M_n` against `sum_{i < N^} X_i`,
/// optionally restricted to an event on `N_n` given by a cut `N_n < cut`.
fn convergent_tvs(kolchin: &Kolchin, n: usize, cut: Option<usize>) -> Result<ConvergentTvs> {
    let nhat = kolchin.law_nhat()?;
    let mut law = kolchin.law_nn(n)?;
    let mut giant = kolchin.giant_deficit_law(n)?;
    if let Some(c) = cut {
        let mass: f64 = law.pmf.iter().take(c).sum();
        law = DiscreteLaw::new(law.pmf.iter().take(c).map(|p| p / mass).collect());
        // on N_n < cut the largest size is the giant one
        giant = DiscreteLaw::new(giant.pmf.iter().map(|p| (p / mass).min(1.0)).collect());
    }
    let limit = kolchin.deficit_limit_law((n - 1) / 2)?;
    let mut table = Table::new(n, &["d", "prob_deficit", "prob_deficit_limit"]);
    for d in 0..giant.len() {
        table
            .rows
            .push(vec![d as f64, giant.prob(d), limit.prob(d)]);
    }
    Ok(ConvergentTvs {
        components: law.tv(&nhat),
        deficit: giant.tv(&limit),
        deficit_upper: giant.tv_upper(&limit),
        deficit_mean: giant.mean(),
        table,
    })
}

/// `E[sum_{i < N^} X_i] = (E[N^] - 1) E[X]`, infinite when either factor is.
fn deficit_limit_mean(scheme: &SchemeSpec, kolchin: &Kolchin) -> f64 {
    let w = kolchin.w_rho;
    let ex = scheme.w.weighted_moment(kolchin.rho, 1, DEFAULT_TOL) / w;
    let en2 = scheme.v.weighted_moment(w, 2, DEFAULT_TOL) / kolchin.v_w;
    let enhat = en2 / kolchin.mean_n;
    let m = (enhat - 1.0) * ex;
    if m.is_finite() {
        m
    } else {
        f64::INFINITY
    }
}

/// Option `k_cap` (default 20): second-largest sizes above it share one chi-square cell.
pub fn verify_convergent(scheme: &SchemeSpec, params: &VerifyParams) -> Result<VerdictReport> {
    let report = classify_base(scheme);
    report.require("convergent", &[Phase::Convergent])?;
    let ladder = params.ladder()?;
    let n_max = params.n_max()?;
    let tol = tol_or(params, 0.1);
    let kolchin = Kolchin::new(scheme, n_max)?;
    let mut v = VerdictReport::new("convergent", scheme, &report, params);
    let (mut tv_n, mut tv_d, mut tv_du, mut means) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for &n in &ladder {
        let t = convergent_tvs(&kolchin, n, None)?;
        tv_n.push(t.components);
        tv_d.push(t.deficit);
        tv_du.push(t.deficit_upper);
        means.push(t.deficit_mean);
        v.tables.push(t.table);
    }
    let last = ladder.len() - 1;
    v.checks.push(Check::new(
        "components TV",
        "TV",
        tv_n[last],
        Comparison::AtMost,
        tol,
    ));
    v.checks.push(Check::new(
        "giant deficit TV",
        "TV",
        tv_d[last],
        Comparison::AtMost,
        tol,
    ));
    v.detail("tv_components", &tv_n);
    v.detail("tv_deficit", &tv_d);
    v.detail("tv_deficit_upper", &tv_du);
    v.detail("deficit_mean", &means);
    let limit_mean = deficit_limit_mean(scheme, &kolchin);
    if limit_mean.is_finite() {
        v.detail("deficit_limit_mean", limit_mean);
        v.checks.push(Check::new(
            "deficit mean",
            "relative error",
            (means[last] - limit_mean).abs() / limit_mean.max(f64::MIN_POSITIVE),
            Comparison::AtMost,
            0.1,
        ));
    } else {
        v.detail("deficit_limit_mean", "infinite");
    }
    if params.replicates > 0 {
        let k_cap = params.option("k_cap", 20.0) as usize;
        let (chi, sampler_chi) = spot_check(&kolchin, n_max, params, k_cap)?;
        v.detail("spot_check_chi_square", chi.statistic);
        v.detail("spot_check_dof", chi.dof);
        v.checks.push(Check::new(
            "sampled components against the exact law",
            "chi-square p-value",
            sampler_chi.p_value,
            Comparison::Above,
            1e-3,
        ));
        v.checks.push(Check::new(
            "components and second-largest size against the limit",
            "chi-square p-value",
            chi.p_value,
            Comparison::Above,
            1e-3,
        ));
    }
    let headline: Vec<f64> = tv_n.iter().zip(&tv_d).map(|(a, b)| a.max(*b)).collect();
    v.headline("TV", ladder, headline, tol);
    Ok(v.finish())
}

/// Chi-square of sampled `(N_n, second-largest size)` against
/// `(N^, max of N^ - 1 independent copies of X)`, and of sampled `N_n` against its exact law.
fn spot_check(
    kolchin: &Kolchin,
    n: usize,
    params: &VerifyParams,
    k_cap: usize,
) -> Result<(super::gof::ChiSquare, super::gof::ChiSquare)> {
    let nhat = kolchin.law_nhat()?;
    let cdf_x = kolchin.law_x.cdf();
    let f = |k: usize| cdf_x.get(k).copied().unwrap_or(1.0);
    // smallest l_cap with P(N^ > l_cap) < 1e-3, at least 1
    let mut l_cap = 1;
    let mut acc = nhat.prob(0) + nhat.prob(1);
    while 1.0 - acc >= 1e-3 && l_cap + 1 < nhat.len() {
        l_cap += 1;
        acc += nhat.prob(l_cap);
    }
    let width = k_cap + 2;
    let overflow = l_cap * width;
    let mut probs = vec![0.0; overflow + 1];
    for l in 1..=l_cap {
        let e = (l - 1) as i32;
        for k in 0..=k_cap {
            let below = if k == 0 { 0.0 } else { f(k - 1).powi(e) };
            let at = if l == 1 { 1.0 } else { f(k).powi(e) };
            let cell = if l == 1 && k > 0 { 0.0 } else { at - below };
            probs[(l - 1) * width + k] = nhat.prob(l) * cell;
        }
        probs[(l - 1) * width + k_cap + 1] =
            nhat.prob(l) * if l == 1 { 0.0 } else { 1.0 - f(k_cap).powi(e) };
    }
    probs[overflow] = (1.0 - probs.iter().sum::<f64>()).max(0.0);
    let sampler = ExactSampler::new(kolchin, n)?;
    let mut counts = vec![0u64; overflow + 1];
    let mut components = vec![0u64; kolchin.law_nn(n)?.len()];
    let top = components.len() - 1;
    for r in 0..params.replicates {
        let mut rng = replicate_rng(params.seed, r as u64);
        let draw = sampler.draw(&mut rng);
        let l = draw.sizes.len();
        components[l.min(top)] += 1;
        let cell = if l == 0 || l > l_cap {
            overflow
        } else {
            let mut s = draw.sizes.clone();
            s.sort_unstable_by(|a, b| b.cmp(a));
            let second = s.get(1).copied().unwrap_or(0);
            (l - 1) * width + second.min(k_cap + 1)
        };
        counts[cell] += 1;
    }
    Ok((
        chi_square(&counts, &probs, 5.0),
        chi_square(&components, &kolchin.law_nn(n)?.pmf, 5.0),
    ))
}

/// `P(E_n)` with `E_n = {N_n >= n / (2 mu)}` against `p` and `p / (1 + p)`,
/// the local limit theorem on `E_n` and the convergent laws on its complement.
/// Option `conv_tol` (default 0.1) bounds the conditional convergent TVs.
pub fn verify_mixture(scheme: &SchemeSpec, params: &VerifyParams) -> Result<VerdictReport> {
    let report = classify_base(scheme);
    report.require("mixture", &[Phase::Mixture])?;
    let ladder = params.ladder()?;
    let tol = tol_or(params, 0.05);
    let conv_tol = params.option("conv_tol", 0.1);
    let mu = report.mu.expect("mixture carries mu");
    let p = report.mixture_p.expect("mixture carries p");
    let p_frac = report.mixture_p_frac.expect("mixture carries p / (1 + p)");
    let kolchin = Kolchin::new(scheme, params.n_max()?)?;
    let mut v = VerdictReport::new("mixture", scheme, &report, params);
    let (mut prob_e, mut err_p, mut err_frac, mut best) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let (mut llt, mut tv_n, mut tv_d) = (Vec::new(), Vec::new(), Vec::new());
    for &n in &ladder {
        let law = kolchin.law_nn(n)?;
        let (cond, pe) = condition_on_event(&law, n, mu);
        prob_e.push(pe);
        err_p.push((pe - p).abs());
        err_frac.push((pe - p_frac).abs());
        best.push((pe - p).abs().min((pe - p_frac).abs()));
        let d = llt_discrepancy(&cond, n, &report, 0.1, params.option("halfwidth", 10.0))?;
        llt.push(d.sup);
        v.tables.push(d.table);
        let c = convergent_tvs(&kolchin, n, Some(event_threshold(n, mu)))?;
        tv_n.push(c.components);
        tv_d.push(c.deficit);
    }
    let last = ladder.len() - 1;
    let winner = if err_frac[last] <= err_p[last] {
        "p/(1+p)"
    } else {
        "p"
    };
    v.detail("p", p);
    v.detail("p_over_1_plus_p", p_frac);
    v.detail("prob_event", &prob_e);
    v.detail("abs_error_p", &err_p);
    v.detail("abs_error_p_over_1_plus_p", &err_frac);
    v.detail("closer", winner);
    v.detail("conditional_llt", &llt);
    v.detail("conditional_tv_components", &tv_n);
    v.detail("conditional_tv_deficit", &tv_d);
    v.checks.push(Check::holds(
        "P(E_n) strictly inside (0, 1)",
        prob_e.iter().all(|&q| q > 0.0 && q < 1.0),
    ));
    v.checks.push(Check::holds(
        "conditional LLT discrepancy nonincreasing",
        nonincreasing(&llt),
    ));
    v.checks.push(Check::new(
        "conditional components TV on the complement",
        "TV",
        tv_n[last],
        Comparison::AtMost,
        conv_tol,
    ));
    v.checks.push(Check::new(
        "conditional giant deficit TV on the complement",
        "TV",
        tv_d[last],
        Comparison::AtMost,
        conv_tol,
    ));
    v.headline("abs-error", ladder, best, tol);
    Ok(v.finish())
}
