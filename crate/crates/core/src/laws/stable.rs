//! Stable laws `S_alpha(gamma, beta, delta)`: characteristic function, series
//! densities in the totally skewed cases and Fourier inversion.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::{gauss_kronrod, ln_gamma_signed, CompensatedSum};

/// Largest tolerated ratio between the biggest series term and the result.
pub const CANCELLATION_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParams {
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
    pub delta: f64,
}

impl StableParams {
    pub fn new(alpha: f64, gamma: f64, beta: f64, delta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in (0, 2], got {alpha}"
            )));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        if !(-1.0..=1.0).contains(&beta) {
            return Err(Error::InvalidArgument(format!(
                "beta must lie in [-1, 1], got {beta}"
            )));
        }
        if !delta.is_finite() {
            return Err(Error::InvalidArgument("delta must be finite".into()));
        }
        Ok(Self {
            alpha,
            gamma,
            beta,
            delta,
        })
    }

    /// The law of `X_alpha(gamma, -1, 0)` with `gamma = (-cos(pi alpha / 2))^{1/alpha}`.
    pub fn dense(alpha: f64) -> Result<Self> {
        Self::new(alpha, dense_gamma(alpha), -1.0, 0.0)
    }

    /// Spectrally positive law with Laplace transform `exp(-lambda t^alpha)`, `alpha < 1`.
    pub fn positive(alpha: f64, lambda: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "positive stable laws need alpha in (0, 1), got {alpha}"
            )));
        }
        Self::new(
            alpha,
            (lambda * (FRAC_PI_2 * alpha).cos()).powf(1.0 / alpha),
            1.0,
            0.0,
        )
    }

    fn reflected(self) -> Self {
        Self {
            beta: -self.beta,
            delta: -self.delta,
            ..self
        }
    }
}

pub fn dense_gamma(alpha: f64) -> f64 {
    (-(FRAC_PI_2 * alpha).cos()).powf(1.0 / alpha)
}

pub fn stable_cf(p: &StableParams, t: f64) -> Complex64 {
    if t == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let at = t.abs();
    let ga = p.gamma.powf(p.alpha);
    let skew = if p.alpha == 1.0 {
        -p.beta * t.signum() * (2.0 / PI) * at.ln()
    } else {
        p.beta * t.signum() * (FRAC_PI_2 * p.alpha).tan()
    };
    let exponent = Complex64::new(
        -ga * at.powf(p.alpha),
        ga * at.powf(p.alpha) * skew + p.delta * t,
    );
    exponent.exp()
}

/// `(1/pi) int_0^inf Re(cf(t) e^{-ixt}) dt`, absolute error around 1e-10.
pub fn stable_density_inversion(p: &StableParams, x: f64) -> Result<f64> {
    if p.alpha < 0.3 {
        return Err(Error::InvalidArgument(format!(
            "inversion is not conditioned for alpha = {} < 0.3",
            p.alpha
        )));
    }
    let ga = p.gamma.powf(p.alpha);
    let upper = (48.0 / ga).powf(1.0 / p.alpha);
    let freq = (x - p.delta).abs().max(1.0);
    let width = (2.0 * PI / freq).min(upper / 8.0);
    let integrand = |t: f64| {
        let z = stable_cf(p, t) * Complex64::new(0.0, -x * t).exp();
        z.re
    };
    let mut total = CompensatedSum::new();
    let mut left = 0.0;
    let mut ok = true;
    while left < upper {
        let right = (left + width).min(upper);
        let q = gauss_kronrod(integrand, left, right, 1e-13, 1e-12, 200);
        ok &= q.converged;
        total.add(q.value);
        left = right;
    }
    if !ok {
        return Err(Error::Quadrature(format!(
            "stable density inversion at x = {x}"
        )));
    }
    Ok((total.value() / PI).max(0.0))
}

/// Result of a series evaluation, with the cancellation ratio it incurred.
struct SeriesValue {
    value: f64,
    cancellation: f64,
}

// (1/pi) sum_{k>=1} Gamma(k/alpha + 1)/k! (-1)^k x^{k-1} sin(-k pi/alpha), 1 < alpha < 2
fn dense_series(alpha: f64, x: f64) -> SeriesValue {
    let mut acc = CompensatedSum::new();
    let mut biggest: f64 = 0.0;
    let lx = x.abs().ln();
    let mut prev = f64::INFINITY;
    for k in 1..20_000u32 {
        let kf = k as f64;
        let (lg, _) = ln_gamma_signed(kf / alpha + 1.0).expect("positive argument");
        let (lf, _) = ln_gamma_signed(kf + 1.0).expect("positive argument");
        let mag = if k == 1 {
            lg - lf
        } else {
            lg - lf + (kf - 1.0) * lx
        };
        let s = (-kf * PI / alpha).sin();
        let sign =
            if k % 2 == 0 { 1.0 } else { -1.0 } * if x < 0.0 && k % 2 == 0 { -1.0 } else { 1.0 };
        let term = sign * s * mag.exp();
        acc.add(term);
        biggest = biggest.max(term.abs());
        let bound = mag.exp();
        if k > 4 && bound < prev && bound < 1e-17 * acc.value().abs().max(1e-300) {
            break;
        }
        prev = bound;
    }
    let value = acc.value() / PI;
    SeriesValue {
        value,
        cancellation: biggest / PI / value.abs().max(1e-300),
    }
}

// density at x of the spectrally positive law with Laplace transform exp(-t^alpha), 0 < alpha < 1
fn positive_series(alpha: f64, x: f64) -> SeriesValue {
    if x <= 0.0 {
        return SeriesValue {
            value: 0.0,
            cancellation: 1.0,
        };
    }
    let lz = -alpha * x.ln();
    let mut acc = CompensatedSum::new();
    let mut biggest: f64 = 0.0;
    let mut prev = f64::INFINITY;
    for k in 1..20_000u32 {
        let kf = k as f64;
        let (lg, _) = ln_gamma_signed(kf * alpha + 1.0).expect("positive argument");
        let (lf, _) = ln_gamma_signed(kf + 1.0).expect("positive argument");
        let bound = (lg - lf + kf * lz).exp();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let term = sign * (-alpha * kf * PI).sin() * bound;
        acc.add(term);
        biggest = biggest.max(term.abs());
        if k > 4 && bound < prev && bound < 1e-17 * acc.value().abs().max(1e-300) {
            break;
        }
        prev = bound;
    }
    let value = acc.value() / (PI * x);
    SeriesValue {
        value,
        cancellation: biggest / (PI * x) / value.abs().max(1e-300),
    }
}

/// Density of a totally skewed stable law (any skewness when `alpha = 2`) from
/// its convergent series, falling back to inversion when the series cancels.
pub fn stable_density_series(p: &StableParams, x: f64) -> Result<f64> {
    let (alpha, gamma) = (p.alpha, p.gamma);
    if alpha == 2.0 {
        let z = (x - p.delta) / gamma;
        return Ok((-z * z / 4.0).exp() / (2.0 * gamma * PI.sqrt()));
    }
    if alpha == 1.0 || p.beta.abs() != 1.0 {
        return Err(Error::InvalidArgument(format!(
            "series densities need alpha != 1 and beta = +-1, got alpha = {alpha}, beta = {}",
            p.beta
        )));
    }
    if alpha > 1.0 && p.beta == 1.0 || alpha < 1.0 && p.beta == -1.0 {
        return stable_density_series(&p.reflected(), -x);
    }
    let y = x - p.delta;
    let sv = if alpha > 1.0 {
        // beta = -1: rescale to the reference gamma
        let g0 = dense_gamma(alpha);
        let r = g0 / gamma;
        let s = dense_series(alpha, y * r);
        SeriesValue {
            value: s.value * r,
            cancellation: s.cancellation,
        }
    } else {
        // beta = 1: Laplace transform exp(-lambda t^alpha)
        let lambda = gamma.powf(alpha) / (FRAC_PI_2 * alpha).cos();
        let r = lambda.powf(-1.0 / alpha);
        let s = positive_series(alpha, y * r);
        SeriesValue {
            value: s.value * r,
            cancellation: s.cancellation,
        }
    };
    if sv.cancellation > CANCELLATION_LIMIT || !sv.value.is_finite() {
        return stable_density_inversion(p, x);
    }
    Ok(sv.value.max(0.0))
}

/// `E[X^s] = lambda^{s/alpha} Gamma(1 - s/alpha) / Gamma(1 - s)` for the
/// positive law with Laplace transform `exp(-lambda t^alpha)`, real `s < alpha`.
pub fn stable_moment(alpha: f64, lambda: f64, s: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if s >= alpha {
        return Err(Error::InvalidArgument(format!(
            "moment of order {s} >= alpha = {alpha} is infinite"
        )));
    }
    let (a, sa) = ln_gamma_signed(1.0 - s / alpha)?;
    let (b, sb) = ln_gamma_signed(1.0 - s)?;
    Ok(sa * sb * (s / alpha * lambda.ln() + a - b).exp())
}
