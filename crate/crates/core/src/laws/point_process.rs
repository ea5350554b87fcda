//! The limiting point process of rescaled component sizes in the dilute phase.

use crate::error::{Error, Result};
use crate::numeric::{gauss_kronrod, ln_beta, ln_gamma_signed};

fn check(alpha: f64, b: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 && b > 1.0 && b < 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "need 0 < alpha < 1 and 1 < b < 2, got alpha = {alpha}, b = {b}"
        )))
    }
}

/// `x^{-alpha-1} (1-x)^{alpha(2-b)-1} / B(1-alpha, alpha(2-b))` on `(0, 1]`.
pub fn pp_intensity(alpha: f64, b: f64, x: f64) -> Result<f64> {
    check(alpha, b)?;
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "intensity lives on (0, 1], got {x}"
        )));
    }
    let theta = alpha * (2.0 - b);
    if x == 1.0 {
        return Ok(f64::INFINITY);
    }
    let lb = ln_beta(1.0 - alpha, theta)?;
    Ok((-(alpha + 1.0) * x.ln() + (theta - 1.0) * (1.0 - x).ln() - lb).exp())
}

/// `E[(Upsilon([x, 1]))_m] / E[(Poi(c Z))_m]`-free prefactor of the factorial moments.
fn prefactor(alpha: f64, b: f64, m: u32) -> Result<f64> {
    let mf = m as f64;
    let (lg_a, s_a) = ln_gamma_signed(1.0 - alpha)?;
    let (g1, s1) = ln_gamma_signed(1.0 + alpha * (1.0 - b))?;
    let (g2, s2) = ln_gamma_signed(mf + 2.0 - b)?;
    let (g3, s3) = ln_gamma_signed(1.0 + alpha * (mf + 1.0 - b))?;
    let (g4, s4) = ln_gamma_signed(2.0 - b)?;
    let sign = s_a.powi(m as i32) * s1 * s2 * s3 * s4;
    Ok(sign * (mf * (alpha.ln() - lg_a) + g1 + g2 - g3 - g4).exp())
}

/// `E[(Upsilon([x, 1]))_m]` for `m` in {1, 2}; `+inf` at `x = 0`.
pub fn pp_factorial_moment(alpha: f64, b: f64, x: f64, m: u32) -> Result<f64> {
    check(alpha, b)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!(
            "interval [x, 1] needs 0 <= x <= 1, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(f64::INFINITY);
    }
    let pre = prefactor(alpha, b, m)?;
    let integral = match m {
        1 => {
            let theta = alpha * (2.0 - b);
            // y = e^u on [x, 1/2] tames the pole at 0
            let near_zero = |u: f64| {
                let y = u.exp();
                y.powf(-alpha) * (1.0 - y).powf(theta - 1.0)
            };
            // y = 1 - s^{1/theta} on [1/2, 1] removes the endpoint singularity at 1
            let near_one = |s: f64| (1.0 - s.powf(1.0 / theta)).powf(-alpha - 1.0) / theta;
            let mut total = 0.0;
            let mut pieces = Vec::new();
            if x < 0.5 {
                pieces.push(gauss_kronrod(
                    near_zero,
                    x.ln(),
                    0.5f64.ln(),
                    1e-13,
                    1e-12,
                    500,
                ));
            }
            let upper = (1.0 - x.max(0.5)).powf(theta);
            pieces.push(gauss_kronrod(near_one, 0.0, upper, 1e-13, 1e-12, 500));
            for q in pieces {
                if !q.converged {
                    return Err(Error::Quadrature("factorial moment, m = 1".into()));
                }
                total += q.value;
            }
            total
        }
        2 => {
            if x > 0.5 {
                return Ok(0.0);
            }
            let theta = alpha * (3.0 - b);
            let inner = |y1: f64| {
                // y2 = 1 - y1 - s^{1/theta}
                let upper = (1.0 - y1 - x).max(0.0).powf(theta);
                gauss_kronrod(
                    |s: f64| (y1 * (1.0 - y1 - s.powf(1.0 / theta))).powf(-alpha - 1.0) / theta,
                    0.0,
                    upper,
                    1e-13,
                    1e-11,
                    200,
                )
                .value
            };
            let q = gauss_kronrod(inner, x, 1.0 - x, 1e-12, 1e-10, 500);
            if !q.converged {
                return Err(Error::Quadrature("factorial moment, m = 2".into()));
            }
            q.value
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "factorial moments implemented for m <= 2, got {m}"
            )))
        }
    };
    Ok(pre * integral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::beta;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn intensity_value() {
        let v = pp_intensity(0.5, 1.5, 0.5).unwrap();
        let expect = 0.5f64.powf(-1.5) * 0.5f64.powf(-0.75) / beta(0.5, 0.25).unwrap();
        assert!((v - expect).abs() < 1e-13 * expect);
        assert!(pp_intensity(0.5, 1.5, 0.0).is_err());
    }

    #[test]
    fn first_moment_is_the_integrated_intensity() {
        for x in [0.05f64, 0.2, 0.4, 0.9] {
            let y = 0.5 * (1.0 + x);
            let s = (1.0 - y).powf(0.25);
            assert!(
                (4.0 * s.powi(3) * pp_intensity(0.5, 1.5, y).unwrap()
                    - 4.0 * y.powf(-1.5) / beta(0.5, 0.25).unwrap())
                .abs()
                    < 1e-9
            );
            // y = 1 - s^4 turns the intensity into 4 y^{-3/2} / B(1/2, 1/4)
            let bb = beta(0.5, 0.25).unwrap();
            let direct = gauss_kronrod(
                |s: f64| 4.0 * (1.0 - s.powi(4)).powf(-1.5) / bb,
                0.0,
                (1.0 - x).powf(0.25),
                1e-12,
                1e-12,
                2000,
            )
            .value;
            let m1 = pp_factorial_moment(0.5, 1.5, x, 1).unwrap();
            assert!((direct - m1).abs() < 1e-6 * m1, "x={x}: {direct} vs {m1}");
        }
        assert_eq!(
            pp_factorial_moment(0.5, 1.5, 0.0, 1).unwrap(),
            f64::INFINITY
        );
        // the mean count blows up like x^{-alpha}
        let r = pp_factorial_moment(0.5, 1.5, 1e-6, 1).unwrap()
            / pp_factorial_moment(0.5, 1.5, 1e-8, 1).unwrap();
        assert!((r - 0.1).abs() < 1e-3);
    }

    #[test]
    fn second_moment_against_monte_carlo() {
        let (alpha, b, x): (f64, f64, f64) = (0.5, 1.5, 0.4);
        let theta = alpha * (3.0 - b);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        // uniform on the triangle {y1, y2 >= x, y1 + y2 <= 1}, area (1 - 2x)^2 / 2
        let area = (1.0 - 2.0 * x).powi(2) / 2.0;
        let draws = 2_000_000;
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for _ in 0..draws {
            let (mut u, mut v): (f64, f64) = (rng.random(), rng.random());
            if u + v > 1.0 {
                u = 1.0 - u;
                v = 1.0 - v;
            }
            let y1 = x + u * (1.0 - 2.0 * x);
            let y2 = x + v * (1.0 - 2.0 * x);
            let g = (1.0 - y1 - y2).powf(theta - 1.0) * (y1 * y2).powf(-alpha - 1.0);
            acc += g;
            acc2 += g * g;
        }
        let mean = acc / draws as f64;
        let sd = ((acc2 / draws as f64 - mean * mean) / draws as f64).sqrt();
        let mc = mean * area * prefactor(alpha, b, 2).unwrap();
        let quad = pp_factorial_moment(alpha, b, x, 2).unwrap();
        let err = sd * area * prefactor(alpha, b, 2).unwrap();
        assert!(
            (mc - quad).abs() < (5.0 * err).max(1e-3 * quad),
            "{mc} vs {quad} (se {err})"
        );
        assert_eq!(pp_factorial_moment(alpha, b, 0.6, 2).unwrap(), 0.0);
    }
}
