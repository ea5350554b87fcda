//! Goodness-of-fit statistics.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Kolmogorov–Smirnov distance between the empirical law of `sample` and a continuous cdf.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d
            .max((f - i as f64 / n).abs())
            .max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Cells are merged left to right until each expects at least `min_expected`
/// counts; the last cell absorbs the remaining probability.
pub fn chi_square(counts: &[u64], probs: &[f64], min_expected: f64) -> ChiSquare {
    let total: u64 = counts.iter().sum();
    let t = total as f64;
    let len = counts.len().max(probs.len());
    let get_c = |i: usize| counts.get(i).copied().unwrap_or(0) as f64;
    let get_p = |i: usize| probs.get(i).copied().unwrap_or(0.0);
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut oc, mut ep) = (0.0, 0.0);
    for i in 0..len {
        oc += get_c(i);
        ep += get_p(i);
        if ep * t >= min_expected {
            cells.push((oc, ep));
            oc = 0.0;
            ep = 0.0;
        }
    }
    // leftover observations and the probability outside `probs`
    let rest = (1.0 - cells.iter().map(|c| c.1).sum::<f64>() - ep).max(0.0);
    if let Some(last) = cells.last_mut() {
        last.0 += oc;
        last.1 += ep + rest;
    } else {
        cells.push((oc, 1.0));
    }
    let statistic: f64 = cells
        .iter()
        .map(|&(o, p)| (o - p * t).powi(2) / (p * t))
        .sum();
    let dof = cells.len().saturating_sub(1);
    ChiSquare {
        statistic,
        dof,
        p_value: p_value(statistic, dof),
    }
}

/// Homogeneity test of two count vectors over the same cells.
pub fn chi_square_two_sample(a: &[u64], b: &[u64], min_expected: f64) -> ChiSquare {
    let len = a.len().max(b.len());
    let get = |v: &[u64], i: usize| v.get(i).copied().unwrap_or(0) as f64;
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut ca, mut cb) = (0.0, 0.0);
    for i in 0..len {
        ca += get(a, i);
        cb += get(b, i);
        let pooled = (ca + cb) / (na + nb);
        if pooled * na.min(nb) >= min_expected {
            cells.push((ca, cb));
            ca = 0.0;
            cb = 0.0;
        }
    }
    if let Some(last) = cells.last_mut() {
        last.0 += ca;
        last.1 += cb;
    } else {
        cells.push((ca, cb));
    }
    let mut statistic = 0.0;
    for &(x, y) in &cells {
        let pooled = (x + y) / (na + nb);
        for (obs, tot) in [(x, na), (y, nb)] {
            let e = pooled * tot;
            if e > 0.0 {
                statistic += (obs - e).powi(2) / e;
            }
        }
    }
    let dof = cells.len().saturating_sub(1);
    ChiSquare {
        statistic,
        dof,
        p_value: p_value(statistic, dof),
    }
}

fn p_value(statistic: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    let chi = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    1.0 - chi.cdf(statistic)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_a_uniform_grid() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_statistic(&xs, |x| x) - 0.005).abs() < 1e-12);
        assert_eq!(ks_two_sample(&xs, &xs), 0.0);
        assert_eq!(ks_two_sample(&[0.0, 1.0], &[2.0, 3.0]), 1.0);
    }

    #[test]
    fn chi_square_perfect_fit() {
        let c = chi_square(&[25, 25, 50], &[0.25, 0.25, 0.5], 5.0);
        assert_eq!(c.statistic, 0.0);
        assert_eq!(c.dof, 2);
        assert!((c.p_value - 1.0).abs() < 1e-12);
        let bad = chi_square(&[100, 0], &[0.5, 0.5], 5.0);
        assert!(bad.p_value < 1e-10);
        let two = chi_square_two_sample(&[10, 20, 30], &[10, 20, 30], 5.0);
        assert_eq!(two.statistic, 0.0);
    }

    #[test]
    fn chi_square_known_value() {
        // statistic 2 with one degree of freedom
        let c = chi_square(&[60, 40], &[0.5, 0.5], 5.0);
        assert!((c.statistic - 4.0).abs() < 1e-12);
        assert!((c.p_value - 0.045_500_263_896_358_4).abs() < 1e-9);
    }
}
