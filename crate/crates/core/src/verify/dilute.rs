//! Dilute phase: `N_n / n^alpha` against `Z`, mixed Poisson counts and the point process of large sizes.

use crate::error::{Error, Result};
use crate::exact::Kolchin;
use crate::laws::{pp_factorial_moment, DiluteParams};
use crate::phase::Phase;
use crate::sampler::{replicate_rng, ExactSampler};
use crate::weights::SchemeSpec;

use super::gof::chi_square;
use super::{classify_base, tol_or, Check, Comparison, Table, VerdictReport, VerifyParams};

const INTERVALS: [f64; 2] = [0.2, 0.4];
const PAIR_INTERVAL: f64 = 0.4;

/// Options: `delta` (default 0.1) for the local window `l >= delta n^alpha` and
/// `upsilon` (default 1) for the count test.
pub fn verify_dilute(scheme: &SchemeSpec, params: &VerifyParams) -> Result<VerdictReport> {
    let report = classify_base(scheme);
    report.require("dilute", &[Phase::Dilute])?;
    let missing = || Error::InvalidArgument("dilute report lacks its constants".into());
    let alpha = report.alpha.ok_or_else(missing)?;
    let b = report.b.ok_or_else(missing)?;
    let lambda = report.dilute_lambda.ok_or_else(missing)?;
    let c_w = report.c_w.ok_or_else(missing)?;
    let z = DiluteParams::new(alpha, b, lambda)?;
    let ladder = params.ladder()?;
    let n_max = params.n_max()?;
    let tol = tol_or(params, 0.1);
    let delta = params.option("delta", 0.1);
    let upsilon = params.option("upsilon", 1.0);
    let kolchin = Kolchin::new(scheme, n_max)?;
    let mut v = VerdictReport::new("dilute", scheme, &report, params);

    let (mut sups, mut ks) = (Vec::new(), Vec::new());
    for &n in &ladder {
        let na = (n as f64).powf(alpha);
        let law = kolchin.law_nn(n)?;
        let xs: Vec<f64> = (0..law.len()).map(|l| l as f64 / na).collect();
        let limit_cdf = z.z_cdf_grid(&xs, 1e-10)?;
        let mut t = Table::new(
            n,
            &[
                "ell",
                "x",
                "scaled_pmf",
                "density",
                "exact_cdf",
                "limit_cdf",
            ],
        );
        let (mut sup, mut d, mut cdf) = (0.0f64, 0.0f64, 0.0);
        for l in 1..law.len() {
            let before = cdf;
            cdf += law.prob(l);
            d = d
                .max((cdf - limit_cdf[l]).abs())
                .max((before - limit_cdf[l]).abs());
            let dens = z.z_density(xs[l])?;
            let scaled = na * law.prob(l);
            if xs[l] >= delta {
                sup = sup.max((scaled - dens).abs());
            }
            t.rows
                .push(vec![l as f64, xs[l], scaled, dens, cdf, limit_cdf[l]]);
        }
        sups.push(sup);
        ks.push(d);
        v.tables.push(t);
    }
    let last = ladder.len() - 1;
    v.checks.push(Check::new(
        "KS against Z",
        "KS",
        ks[last],
        Comparison::AtMost,
        tol,
    ));
    v.detail("ks", &ks);

    // counts at k_n where n^alpha P(X = k_n) is close to upsilon
    let na = (n_max as f64).powf(alpha);
    let k_target = (c_w / (upsilon * report.w_at_rho)).powf(1.0 / (1.0 + alpha))
        * na.powf(1.0 / (1.0 + alpha));
    let k_n = (k_target.round() as usize).clamp(1, n_max);
    let upsilon_eff = na * kolchin.law_x.prob(k_n);
    let sampler = ExactSampler::new(&kolchin, n_max)?;
    let reps = params.replicates.max(1);
    let mut counts: Vec<u64> = Vec::new();
    let mut ups = [0.0f64; 2];
    let mut ups_sq = [0.0f64; 2];
    let (mut pairs, mut pairs_sq) = (0.0f64, 0.0f64);
    let pair_min = min_size(PAIR_INTERVAL, n_max);
    for r in 0..reps {
        let mut rng = replicate_rng(params.seed, r as u64);
        let draw = sampler.draw(&mut rng);
        let c = draw.sizes.iter().filter(|&&k| k == k_n).count();
        if counts.len() <= c {
            counts.resize(c + 1, 0);
        }
        counts[c] += 1;
        for (i, &x) in INTERVALS.iter().enumerate() {
            let m = min_size(x, n_max);
            let c = draw.sizes.iter().filter(|&&k| k >= m).count() as f64;
            ups[i] += c;
            ups_sq[i] += c * c;
        }
        let c = draw.sizes.iter().filter(|&&k| k >= pair_min).count() as f64;
        let f2 = c * (c - 1.0);
        pairs += f2;
        pairs_sq += f2 * f2;
    }
    let mut probs = Vec::new();
    for j in 0..counts.len() + 8 {
        probs.push(z.mixed_poisson_pmf(upsilon_eff, j as u64)?);
    }
    let chi = chi_square(&counts, &probs, 5.0);
    let zero_freq = counts.first().copied().unwrap_or(0) as f64 / reps as f64;
    v.detail("k_n", k_n);
    v.detail("upsilon_effective", upsilon_eff);
    v.detail("count_chi_square", chi.statistic);
    v.detail("count_dof", chi.dof);
    v.detail("zero_count_frequency", zero_freq);
    v.detail("zero_count_limit", probs[0]);
    v.checks.push(Check::new(
        "mixed Poisson counts",
        "chi-square p-value",
        chi.p_value,
        Comparison::Above,
        1e-3,
    ));
    v.checks.push(Check::new(
        "zero count frequency",
        "abs-error",
        (zero_freq - probs[0]).abs(),
        Comparison::AtMost,
        0.03,
    ));

    let rf = reps as f64;
    for (i, &x) in INTERVALS.iter().enumerate() {
        let limit = pp_factorial_moment(alpha, b, x, 1)?;
        let exact = kolchin.large_count_moment(n_max, min_size(x, n_max), 1)?;
        let mc = ups[i] / rf;
        let se = ((ups_sq[i] / rf - mc * mc) / rf).sqrt();
        v.detail(&format!("mean_count_{x}_limit"), limit);
        v.detail(&format!("mean_count_{x}_exact"), exact);
        v.detail(&format!("mean_count_{x}_monte_carlo"), mc);
        v.detail(&format!("mean_count_{x}_standard_error"), se);
        v.checks.push(relative(
            &format!("exact mean count on [{x}, 1]"),
            exact,
            limit,
            0.1,
        ));
        v.checks.push(relative(
            &format!("Monte Carlo mean count on [{x}, 1]"),
            mc,
            limit,
            0.1,
        ));
    }
    let limit2 = pp_factorial_moment(alpha, b, PAIR_INTERVAL, 2)?;
    let exact2 = kolchin.large_count_moment(n_max, pair_min, 2)?;
    let mc2 = pairs / rf;
    let se2 = ((pairs_sq / rf - mc2 * mc2) / rf).sqrt();
    v.detail("second_factorial_moment_limit", limit2);
    v.detail("second_factorial_moment_exact", exact2);
    v.detail("second_factorial_moment_monte_carlo", mc2);
    v.detail("second_factorial_moment_standard_error", se2);
    v.checks.push(relative(
        "exact second factorial moment on [0.4, 1]",
        exact2,
        limit2,
        0.2,
    ));
    v.checks.push(relative(
        "Monte Carlo second factorial moment on [0.4, 1]",
        mc2,
        limit2,
        0.2,
    ));

    v.headline("sup-LLT-discrepancy", ladder, sups, tol);
    Ok(v.finish())
}

/// Smallest size `k` with `k / n >= x`.
fn min_size(x: f64, n: usize) -> usize {
    // the guard keeps products like 0.4 * 5000 from rounding up past an integer
    ((x * n as f64 - 1e-9).ceil() as usize).max(1)
}

fn relative(name: &str, observed: f64, limit: f64, tol: f64) -> Check {
    Check::new(
        name,
        "relative error",
        (observed - limit).abs() / limit,
        Comparison::AtMost,
        tol,
    )
}
