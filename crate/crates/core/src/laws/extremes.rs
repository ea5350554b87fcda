//! Extreme-value limits: Fréchet laws of the largest jumps and the Gumbel law.

use crate::error::{Error, Result};
use crate::numeric::{ln_gamma_signed, special::ln_factorial};

/// Limit of the `j`-th largest component over `L(n) n^{1/alpha}`, `1 < alpha < 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrechetLaw {
    pub mu: f64,
    pub alpha: f64,
    pub j: u32,
    // mu^alpha / |Gamma(1 - alpha)|
    rate: f64,
}

impl FrechetLaw {
    pub fn new(mu: f64, alpha: f64, j: u32) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::InvalidArgument(format!(
                "Fréchet limits need 1 < alpha < 2 (the alpha = 2 limit is degenerate), got {alpha}"
            )));
        }
        if !(mu > 0.0) || j == 0 {
            return Err(Error::InvalidArgument(
                "mu must be positive and j >= 1".into(),
            ));
        }
        let (lg, sign) = ln_gamma_signed(1.0 - alpha)?;
        debug_assert!(sign < 0.0);
        Ok(Self {
            mu,
            alpha,
            j,
            rate: (alpha * mu.ln() - lg).exp(),
        })
    }

    fn intensity(&self, x: f64) -> f64 {
        self.rate * x.powf(-self.alpha)
    }

    /// `P(W_j <= x) = P(Poi(m(x)) < j)` with `m(x) = mu^alpha x^{-alpha} / |Gamma(1 - alpha)|`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let m = self.intensity(x);
        (0..self.j)
            .map(|i| (i as f64 * m.ln() - m - ln_factorial(i as u64)).exp())
            .sum::<f64>()
            .min(1.0)
    }

    pub fn density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let m = self.intensity(x);
        let j = self.j as f64;
        (self.alpha.ln() + m.ln() - x.ln() + (j - 1.0) * m.ln()
            - ln_factorial(self.j as u64 - 1)
            - m)
            .exp()
    }
}

pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{gamma, gauss_kronrod};

    #[test]
    fn first_jump_cdf() {
        let w = FrechetLaw::new(1.0, 1.5, 1).unwrap();
        let x = (-1.0 / gamma(-0.5).unwrap()).powf(2.0 / 3.0);
        assert!((w.cdf(x) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((w.cdf(1e9) - 1.0).abs() < 1e-12);
        assert!(FrechetLaw::new(1.0, 2.0, 1).is_err());
    }

    #[test]
    fn densities_are_normalized_and_match_cdfs() {
        for j in 1..=3 {
            let w = FrechetLaw::new(1.3, 1.5, j).unwrap();
            let q = gauss_kronrod(
                |u: f64| w.density(u.exp()) * u.exp(),
                -20.0,
                40.0,
                1e-12,
                1e-12,
                500,
            );
            assert!((q.value - 1.0).abs() < 1e-6, "j={j}: {}", q.value);
            let x: f64 = 0.8;
            let part = gauss_kronrod(
                |u: f64| w.density(u.exp()) * u.exp(),
                -20.0,
                x.ln(),
                1e-12,
                1e-12,
                500,
            );
            assert!((part.value - w.cdf(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn gumbel_examples() {
        assert_eq!(gumbel_cdf(0.0), (-1.0f64).exp());
        assert_eq!(gumbel_cdf(50.0), 1.0);
        assert!((gumbel_cdf(-(2f64.ln()).ln()) - 0.5).abs() < 1e-15);
    }
}
