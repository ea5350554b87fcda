//! The non-suite subcommands: classify, exact, laws and sample.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use gibbs_core::exact::Kolchin;
use gibbs_core::laws::{
    pp_intensity, stable_density_series, DiluteParams, FrechetLaw, StableParams,
};
use gibbs_core::sampler::{replicate_rng, Acceptance, ExactSampler, RejectionSampler};
use gibbs_core::verify::Table;
use gibbs_core::{classify, presets, Phase, SchemeSpec};
use serde_json::{json, Value};

use crate::config::SuiteConfig;
use crate::output::write_table;

/// Schemes declared in the config, then the presets.
pub fn lookup_scheme(config: Option<&SuiteConfig>, name: &str) -> Result<SchemeSpec> {
    if let Some(cfg) = config {
        if let Some(decl) = cfg.schemes.get(name) {
            return decl.build().with_context(|| format!("scheme {name:?}"));
        }
    }
    presets::by_name(name).ok_or_else(|| {
        anyhow!(
            "unknown scheme {name:?}; presets are {}",
            presets::NAMES.join(", ")
        )
    })
}

/// Phase reports keyed by scheme name: the requested names, else every declared scheme, else every preset.
pub fn classify_cmd(config: Option<&SuiteConfig>, names: &[String]) -> Result<Value> {
    let names: Vec<String> = if !names.is_empty() {
        names.to_vec()
    } else if let Some(cfg) = config.filter(|c| !c.schemes.is_empty()) {
        cfg.schemes.keys().cloned().collect()
    } else {
        presets::NAMES.iter().map(|s| s.to_string()).collect()
    };
    let mut out = serde_json::Map::new();
    for name in names {
        let scheme = lookup_scheme(config, &name)?;
        out.insert(name, serde_json::to_value(classify(&scheme))?);
    }
    Ok(Value::Object(out))
}

fn save(dir: &Path, name: &str, t: &Table) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_table(&dir.join(name), t)
}

fn table(header: &[&str]) -> Table {
    Table {
        n: 0,
        header: header.iter().map(|s| s.to_string()).collect(),
        rows: Vec::new(),
    }
}

/// Exact laws at size `n`: `N_n`, the first size, the giant deficit and `u_m`.
pub fn exact_cmd(
    scheme_name: &str,
    scheme: &SchemeSpec,
    n: usize,
    out_dir: &Path,
) -> Result<Value> {
    let k = Kolchin::new(scheme, n)?;
    let dir = out_dir.join("exact").join(scheme_name).join(n.to_string());
    let law = k.law_nn(n)?;
    let mut t = table(&["ell", "prob"]);
    for (l, p) in law.pmf.iter().enumerate() {
        t.rows.push(vec![l as f64, *p]);
    }
    save(&dir, "law_nn.csv", &t)?;
    let prefix = k.prefix_law(n, 1)?;
    let mut t = table(&["k", "prob_first_size", "prob_x"]);
    for kk in 0..=n {
        t.rows
            .push(vec![kk as f64, prefix.pmf[kk], k.law_x.prob(kk)]);
    }
    save(&dir, "prefix.csv", &t)?;
    let giant = k.giant_deficit_law(n)?;
    let mut t = table(&["d", "prob_deficit"]);
    for (d, p) in giant.pmf.iter().enumerate() {
        t.rows.push(vec![d as f64, *p]);
    }
    save(&dir, "giant_deficit.csv", &t)?;
    let mut t = table(&["m", "partition_function"]);
    for m in 0..=n {
        t.rows.push(vec![m as f64, k.partition_function(m)]);
    }
    save(&dir, "partition_function.csv", &t)?;
    Ok(json!({
        "scheme": scheme_name,
        "n": n,
        "rho": k.rho,
        "mean_components": law.mean(),
        "prefix_tv": prefix.tv,
        "prob_unique_giant": giant.pmf.iter().sum::<f64>(),
        "partition_function_n": k.partition_function(n),
        "output_dir": dir.display().to_string(),
    }))
}

/// Limit laws of the scheme's phase on a grid.
pub fn laws_cmd(
    scheme_name: &str,
    scheme: &SchemeSpec,
    points: usize,
    out_dir: &Path,
) -> Result<Value> {
    let report = classify(scheme);
    let dir = out_dir.join("laws").join(scheme_name);
    let points = points.max(2);
    let grid = |lo: f64, hi: f64| {
        (0..points).map(move |i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
    };
    let mut files = Vec::new();
    match report.phase {
        Phase::DenseCritical | Phase::DenseSupercritical | Phase::Mixture => {
            let alpha = report
                .alpha
                .ok_or_else(|| anyhow!("no alpha in the report"))?;
            let h = StableParams::dense(alpha)?;
            let mut t = table(&["x", "density"]);
            for x in grid(-8.0, 8.0) {
                t.rows.push(vec![x, stable_density_series(&h, x)?]);
            }
            save(&dir, "fluctuation_density.csv", &t)?;
            files.push("fluctuation_density.csv");
            if alpha < 2.0 {
                let mu = report.mu.ok_or_else(|| anyhow!("no mu in the report"))?;
                let w1 = FrechetLaw::new(mu, alpha, 1)?;
                let mut t = table(&["x", "cdf", "density"]);
                for x in grid(0.05, 10.0) {
                    t.rows.push(vec![x, w1.cdf(x), w1.density(x)]);
                }
                save(&dir, "largest_size.csv", &t)?;
                files.push("largest_size.csv");
            }
        }
        Phase::Convergent => {
            let k = Kolchin::new(scheme, 200)?;
            let nhat = k.law_nhat()?;
            let mut t = table(&["ell", "prob"]);
            for (l, p) in nhat.pmf.iter().enumerate() {
                t.rows.push(vec![l as f64, *p]);
            }
            save(&dir, "components.csv", &t)?;
            let deficit = k.deficit_limit_law(200)?;
            let mut t = table(&["d", "prob"]);
            for (d, p) in deficit.pmf.iter().enumerate() {
                t.rows.push(vec![d as f64, *p]);
            }
            save(&dir, "deficit.csv", &t)?;
            files.extend(["components.csv", "deficit.csv"]);
        }
        Phase::Dilute => {
            let (alpha, b, lambda) = match (report.alpha, report.b, report.dilute_lambda) {
                (Some(a), Some(b), Some(l)) => (a, b, l),
                _ => bail!("dilute report lacks its constants"),
            };
            let z = DiluteParams::new(alpha, b, lambda)?;
            let xs: Vec<f64> = grid(0.01, 6.0).collect();
            let cdf = z.z_cdf_grid(&xs, 1e-10)?;
            let mut t = table(&["x", "density", "cdf"]);
            for (x, c) in xs.iter().zip(&cdf) {
                t.rows.push(vec![*x, z.z_density(*x)?, *c]);
            }
            save(&dir, "components.csv", &t)?;
            let mut t = table(&["x", "intensity"]);
            for x in grid(0.01, 0.99) {
                t.rows.push(vec![x, pp_intensity(alpha, b, x)?]);
            }
            save(&dir, "point_process.csv", &t)?;
            files.extend(["components.csv", "point_process.csv"]);
        }
        Phase::Unclassified => bail!(
            "scheme {scheme_name:?} is unclassified: {}",
            report.notes.join("; ")
        ),
    }
    Ok(json!({
        "scheme": scheme_name,
        "phase": report.phase,
        "files": files,
        "output_dir": dir.display().to_string(),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    Rejection,
}

/// Draw `replicates` partitions of `[n]`; replicate `r` uses stream `r` of `seed`.
pub fn sample_cmd(
    scheme_name: &str,
    scheme: &SchemeSpec,
    n: usize,
    replicates: usize,
    seed: u64,
    method: Method,
    out_dir: &Path,
) -> Result<Value> {
    let dir = out_dir.join("samples");
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(format!("{scheme_name}_{n}.csv"));
    let mut csv = String::from("replicate,n_components,largest,sizes\n");
    let mut log = Acceptance::default();
    let mut components = 0usize;
    let mut push = |r: usize, sizes: &[usize]| {
        let largest = sizes.iter().max().copied().unwrap_or(0);
        let joined: Vec<String> = sizes.iter().map(|s| s.to_string()).collect();
        csv.push_str(&format!(
            "{r},{},{largest},{}\n",
            sizes.len(),
            joined.join(";")
        ));
        components += sizes.len();
    };
    match method {
        Method::Exact => {
            let k = Kolchin::new(scheme, n)?;
            let sampler = ExactSampler::new(&k, n)?;
            for r in 0..replicates {
                push(r, &sampler.draw(&mut replicate_rng(seed, r as u64)).sizes);
            }
        }
        Method::Rejection => {
            let sampler = RejectionSampler::new(scheme, n)?;
            for r in 0..replicates {
                push(
                    r,
                    &sampler
                        .draw(&mut replicate_rng(seed, r as u64), &mut log)?
                        .sizes,
                );
            }
        }
    }
    std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
    let mut summary = BTreeMap::new();
    summary.insert("scheme", json!(scheme_name));
    summary.insert("n", json!(n));
    summary.insert("replicates", json!(replicates));
    summary.insert("seed", json!(seed));
    summary.insert(
        "mean_components",
        json!(components as f64 / replicates.max(1) as f64),
    );
    if method == Method::Rejection {
        summary.insert("acceptance", serde_json::to_value(log)?);
    }
    summary.insert("output", json!(path.display().to_string()));
    Ok(serde_json::to_value(summary)?)
}
