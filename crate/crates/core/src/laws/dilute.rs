//! The limit `Z` of `N_n / n^alpha` in the dilute phase.

use crate::error::{Error, Result};
use crate::numeric::{gauss_kronrod, ln_gamma_signed, special::ln_factorial};

use super::stable::{stable_density_series, stable_moment, StableParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiluteParams {
    pub alpha: f64,
    pub b: f64,
    pub lambda: f64,
}

// integrals over (0, inf) run in u = log x on this window
const U_LO: f64 = -200.0;

impl DiluteParams {
    pub fn new(alpha: f64, b: f64, lambda: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        if !(b > 1.0 && b < 2.0) {
            return Err(Error::InvalidArgument(format!(
                "b must lie in (1, 2), got {b}"
            )));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        Ok(Self { alpha, b, lambda })
    }

    pub fn stable(&self) -> StableParams {
        StableParams::positive(self.alpha, self.lambda).expect("validated alpha")
    }

    fn normalizer(&self) -> f64 {
        self.alpha
            * stable_moment(self.alpha, self.lambda, self.alpha * (self.b - 1.0)).expect("b < 2")
    }

    /// `f(x^{-1/alpha}) / (alpha E[X^{alpha(b-1)}] x^{b + 1/alpha})`.
    pub fn z_density(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "Z density needs x > 0, got {x}"
            )));
        }
        let y = x.powf(-1.0 / self.alpha);
        let f = stable_density_series(&self.stable(), y)?;
        if f == 0.0 {
            return Ok(0.0);
        }
        Ok((f.ln() - (self.b + 1.0 / self.alpha) * x.ln()).exp() / self.normalizer())
    }

    /// `E[Z^r]` in closed form, `r > b - 2`.
    pub fn z_moment(&self, r: f64) -> Result<f64> {
        let (alpha, b) = (self.alpha, self.b);
        if r <= b - 2.0 {
            return Err(Error::InvalidArgument(format!(
                "E[Z^r] needs r > b - 2, got r = {r}"
            )));
        }
        let (g1, s1) = ln_gamma_signed(2.0 - b + r)?;
        let (g2, s2) = ln_gamma_signed(1.0 - alpha * (b - 1.0))?;
        let (g3, s3) = ln_gamma_signed(2.0 - b)?;
        let (g4, s4) = ln_gamma_signed(1.0 - alpha * (b - r - 1.0))?;
        Ok(s1 * s2 * s3 * s4 * (-r * self.lambda.ln() + g1 + g2 - g3 - g4).exp())
    }

    /// `int_0^inf phi(x) tilde f(x) dx`, integrating in `log x`.
    pub fn expect<F: Fn(f64) -> f64>(&self, phi: F, tol: f64) -> Result<f64> {
        self.integrate_window(&phi, U_LO, self.upper_u(), tol)
    }

    /// `P(Z <= x)`.
    pub fn z_cdf(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        let u = x.ln();
        if u >= self.upper_u() {
            return Ok(1.0);
        }
        self.integrate_window(&|_| 1.0, U_LO, u, 1e-10)
    }

    /// `P(Z <= x)` along an increasing grid, integrating only between neighbours.
    pub fn z_cdf_grid(&self, xs: &[f64], tol: f64) -> Result<Vec<f64>> {
        let top = self.upper_u();
        let mut out = Vec::with_capacity(xs.len());
        let (mut u_prev, mut acc) = (U_LO, 0.0);
        for &x in xs {
            if x <= 0.0 {
                out.push(0.0);
                continue;
            }
            let u = x.ln().min(top);
            if u < u_prev {
                return Err(Error::InvalidArgument("grid must be increasing".into()));
            }
            if u > u_prev {
                acc += self.integrate_window(&|_| 1.0, u_prev, u, tol)?;
                u_prev = u;
            }
            out.push(acc.min(1.0));
        }
        Ok(out)
    }

    /// `P(Poi(upsilon Z) = k)`.
    pub fn mixed_poisson_pmf(&self, upsilon: f64, k: u64) -> Result<f64> {
        let lk = ln_factorial(k);
        self.expect(
            |z| {
                let m = upsilon * z;
                if m == 0.0 {
                    return if k == 0 { 1.0 } else { 0.0 };
                }
                (k as f64 * m.ln() - m - lk).exp()
            },
            1e-10,
        )
    }

    // beyond this log x the density is below 1e-300
    fn upper_u(&self) -> f64 {
        // f(y) ~ exp(-c y^{-alpha/(1-alpha)}) as y -> 0; scan on a coarse grid
        let mut u: f64 = 0.0;
        while u < 200.0 {
            let d = self.z_density(u.exp()).unwrap_or(0.0);
            if d * u.exp() < 1e-40 {
                return u;
            }
            u += 0.5;
        }
        u
    }

    fn integrate_window(
        &self,
        phi: &dyn Fn(f64) -> f64,
        lo: f64,
        hi: f64,
        tol: f64,
    ) -> Result<f64> {
        let g = |u: f64| {
            let x = u.exp();
            match self.z_density(x) {
                Ok(d) if d > 0.0 => phi(x) * d * x,
                _ => 0.0,
            }
        };
        // unit panels above log x = -20 so narrow peaks of phi are never skipped
        let mut cuts = vec![lo];
        let mut u = lo.max(-20.0).ceil();
        while u < hi {
            if u > lo {
                cuts.push(u);
            }
            u += 1.0;
        }
        cuts.push(hi);
        let per = tol / cuts.len() as f64;
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let q = gauss_kronrod(g, w[0], w[1], per, tol, 4000);
            if !q.converged {
                return Err(Error::Quadrature(format!(
                    "Z integral, error estimate {:e}",
                    q.error
                )));
            }
            total += q.value;
        }
        Ok(total)
    }
}
