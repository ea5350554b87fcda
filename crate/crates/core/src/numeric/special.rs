use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `(ln|Γ(x)|, sign Γ(x))`, valid on the whole real line except the poles.
pub fn ln_gamma_signed(x: f64) -> Result<(f64, f64)> {
    if x.is_nan() {
        return Err(Error::InvalidArgument("Γ(NaN)".into()));
    }
    if x <= 0.0 && x == x.floor() {
        return Err(Error::InvalidArgument(format!("Γ has a pole at {x}")));
    }
    if x > 0.0 {
        return Ok((statrs::function::gamma::ln_gamma(x), 1.0));
    }
    // Γ(x)Γ(1-x) = π / sin(πx)
    let s = (PI * x).sin();
    let ln = PI.ln() - s.abs().ln() - statrs::function::gamma::ln_gamma(1.0 - x);
    Ok((ln, s.signum()))
}

pub fn gamma(x: f64) -> Result<f64> {
    let (ln, sign) = ln_gamma_signed(x)?;
    Ok(sign * ln.exp())
}

pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    if a <= 0.0 || b <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "B({a}, {b}) needs positive arguments"
        )));
    }
    let lg = statrs::function::gamma::ln_gamma;
    Ok(lg(a) + lg(b) - lg(a + b))
}

pub fn beta(a: f64, b: f64) -> Result<f64> {
    ln_beta(a, b).map(f64::exp)
}

pub fn ln_factorial(k: u64) -> f64 {
    statrs::function::factorial::ln_factorial(k)
}

pub fn poisson_pmf(k: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * mean.ln() - mean - ln_factorial(k)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_negative_half() {
        // Γ(-1/2) = -2√π
        let g = gamma(-0.5).unwrap();
        assert!((g + 2.0 * PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn gamma_reflection_sign_alternates() {
        assert!(gamma(-0.5).unwrap() < 0.0);
        assert!(gamma(-1.5).unwrap() > 0.0);
        assert!(gamma(-2.5).unwrap() < 0.0);
    }

    #[test]
    fn gamma_poles_are_rejected() {
        assert!(gamma(0.0).is_err());
        assert!(gamma(-3.0).is_err());
    }

    #[test]
    fn beta_half_quarter() {
        let b = beta(0.5, 0.25).unwrap();
        let expect = gamma(0.5).unwrap() * gamma(0.25).unwrap() / gamma(0.75).unwrap();
        assert!((b - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn poisson_sums_to_one() {
        let total: f64 = (0..60).map(|k| poisson_pmf(k, 3.7)).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }
}
