use serde::Serialize;

use crate::numeric::sum::sum;

/// A probability mass function on `0..pmf.len()`; `1 - mass_accounted` is the
/// mass that lies outside, reported rather than renormalized away.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteLaw {
    pub pmf: Vec<f64>,
    pub mass_accounted: f64,
}

impl DiscreteLaw {
    pub fn new(pmf: Vec<f64>) -> Self {
        let mass_accounted = sum(pmf.iter().copied());
        Self {
            pmf,
            mass_accounted,
        }
    }

    pub fn point_mass(k: usize) -> Self {
        let mut pmf = vec![0.0; k + 1];
        pmf[k] = 1.0;
        Self::new(pmf)
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.pmf.get(k).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.pmf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pmf.is_empty()
    }

    pub fn deficit(&self) -> f64 {
        (1.0 - self.mass_accounted).max(0.0)
    }

    /// `sum_k k pmf[k]`, over the accounted support only.
    pub fn mean(&self) -> f64 {
        sum(self.pmf.iter().enumerate().map(|(k, &p)| k as f64 * p))
    }

    pub fn cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.pmf
            .iter()
            .map(|&p| {
                acc += p;
                acc
            })
            .collect()
    }

    /// Scaled to total mass one.
    pub fn normalized(&self) -> Self {
        let pmf: Vec<f64> = self.pmf.iter().map(|&p| p / self.mass_accounted).collect();
        Self {
            pmf,
            mass_accounted: 1.0,
        }
    }

    /// Total variation with both deficits merged into one common atom.
    pub fn tv(&self, other: &Self) -> f64 {
        0.5 * (l1(&self.pmf, &other.pmf) + (self.deficit() - other.deficit()).abs())
    }

    /// Total variation bound valid however the deficits are spread.
    pub fn tv_upper(&self, other: &Self) -> f64 {
        (0.5 * (l1(&self.pmf, &other.pmf) + self.deficit() + other.deficit())).min(1.0)
    }
}

fn l1(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    sum((0..n).map(|k| (p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0)).abs()))
}
