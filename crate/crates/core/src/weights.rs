//! Weight sequences `v`, `w` (and optional extended-scheme factors), their
//! generating series, radii, moments and tilts.
//!
//! A sequence is either a finite explicit coefficient list or a regularly
//! varying closed form `L(n) n^{-e} rho^{-n}` with `L` a constant or a power of
//! `log(2 + n)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{integrate_tail, CompensatedSum};

/// Absolute tolerance used by callers that do not care to pick one.
pub const DEFAULT_TOL: f64 = 1e-14;

/// Slowly varying factor of a closed-form sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SlowVarying {
    Constant(f64),
    /// `c * log(2 + n)^lambda`
    LogPower {
        c: f64,
        lambda: f64,
    },
}

impl SlowVarying {
    pub fn coefficient(&self) -> f64 {
        match *self {
            SlowVarying::Constant(c) | SlowVarying::LogPower { c, .. } => c,
        }
    }

    pub fn log_exponent(&self) -> f64 {
        match *self {
            SlowVarying::Constant(_) => 0.0,
            SlowVarying::LogPower { lambda, .. } => lambda,
        }
    }

    /// `lim L(n)` when it exists and is positive.
    pub fn limit(&self) -> Option<f64> {
        (self.log_exponent() == 0.0).then(|| self.coefficient())
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            SlowVarying::Constant(c) => c,
            SlowVarying::LogPower { c, lambda } => c * (2.0 + x).ln().powf(lambda),
        }
    }

    // d/dx ln L(x), and the next two derivatives.
    fn log_derivatives(&self, x: f64) -> (f64, f64, f64) {
        let lambda = self.log_exponent();
        if lambda == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let y = 2.0 + x;
        let l = y.ln();
        let d1 = lambda / (y * l);
        let d2 = -lambda * (l + 1.0) / (y * y * l * l);
        let d3 = lambda * (2.0 * (l + 1.0) * (l + 1.0) - l) / (y * y * y * l * l * l);
        (d1, d2, d3)
    }
}

/// `term(n) = L(n) n^{-exponent} rho^{-n}` for `n >= max(start_index, 1)`,
/// `term(0) = zero_term`, with `overrides` taking precedence everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub slow: SlowVarying,
    pub exponent: f64,
    pub rho: f64,
    pub start_index: usize,
    pub zero_term: f64,
    pub overrides: BTreeMap<usize, f64>,
}

impl ClosedForm {
    pub fn new(slow: SlowVarying, exponent: f64, rho: f64) -> Result<Self> {
        let c = slow.coefficient();
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidWeights(format!(
                "slowly varying coefficient must be positive, got {c}"
            )));
        }
        if !slow.log_exponent().is_finite() || !exponent.is_finite() {
            return Err(Error::InvalidWeights("exponents must be finite".into()));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidWeights(format!(
                "rho must be positive and finite, got {rho}"
            )));
        }
        Ok(Self {
            slow,
            exponent,
            rho,
            start_index: 1,
            zero_term: 0.0,
            overrides: BTreeMap::new(),
        })
    }

    /// `c n^{-e} rho^{-n}`.
    pub fn power(c: f64, exponent: f64, rho: f64) -> Result<Self> {
        Self::new(SlowVarying::Constant(c), exponent, rho)
    }

    pub fn start_at(mut self, index: usize) -> Self {
        self.start_index = index;
        self
    }

    pub fn with_zero_term(mut self, value: f64) -> Result<Self> {
        check_weight(value)?;
        self.zero_term = value;
        Ok(self)
    }

    pub fn with_override(mut self, index: usize, value: f64) -> Result<Self> {
        check_weight(value)?;
        self.overrides.insert(index, value);
        Ok(self)
    }

    #[inline]
    fn base(&self, x: f64, ln_ratio: f64) -> f64 {
        self.slow.value(x) * (-self.exponent * x.ln() + x * ln_ratio).exp()
    }

    fn head_end(&self) -> usize {
        let after_overrides = self.overrides.keys().next_back().map_or(0, |&k| k + 1);
        self.start_index.max(1).max(after_overrides)
    }

    fn raw_term(&self, n: usize) -> f64 {
        if let Some(&x) = self.overrides.get(&n) {
            return x;
        }
        if n == 0 {
            return self.zero_term;
        }
        if n < self.start_index {
            return 0.0;
        }
        let x = n as f64;
        self.base(x, -self.rho.ln())
    }

    fn scaled_term(&self, n: usize, t: f64) -> f64 {
        if self.overrides.contains_key(&n) || n == 0 || n < self.start_index {
            return scale(self.raw_term(n), n, t);
        }
        self.base(n as f64, (t / self.rho).ln())
    }

    /// `sum_n n^k term(n) t^n` with absolute error at most `tol`, or `+inf`.
    fn series(&self, t: f64, k: u32, tol: f64) -> f64 {
        let ratio = t / self.rho;
        if ratio > 1.0 + 1e-14 {
            return f64::INFINITY;
        }
        if t == 0.0 {
            return if k == 0 { self.raw_term(0) } else { 0.0 };
        }
        let s = self.exponent - k as f64;
        let boundary = ratio >= 1.0 - 1e-14;
        if boundary && s <= 1.0 {
            return f64::INFINITY;
        }
        let ln_r = if boundary { 0.0 } else { ratio.ln() };
        let head_end = self.head_end();
        let mut acc = CompensatedSum::new();
        for n in 0..head_end {
            acc.add(moment_factor(n, k) * self.scaled_term(n, t));
        }
        let f = |x: f64| self.slow.value(x) * (-s * x.ln() + x * ln_r).exp();

        if ln_r < -0.01 {
            // geometric tail bound term(n) q / (1 - q), q bounding the term ratio
            let lambda = self.slow.log_exponent();
            let mut n = head_end;
            loop {
                let x = n as f64;
                let fx = f(x);
                acc.add(fx);
                let growth = ((x + 1.0) / x).powf((-s).max(0.0))
                    * ((3.0 + x).ln() / (2.0 + x).ln()).powf(lambda.max(0.0));
                let q = ratio * growth;
                if q < 1.0 && fx * q / (1.0 - q) < 0.5 * tol {
                    break;
                }
                n += 1;
                if n > 100_000_000 {
                    return f64::NAN;
                }
            }
            return acc.value();
        }

        // Euler–Maclaurin: sum_{n>=N} f(n) = int_N^inf f + f(N)/2 - f'(N)/12 + f'''(N)/720 - ...
        let derivs = |x: f64| {
            let (l1, l2, l3) = self.slow.log_derivatives(x);
            let g1 = l1 - s / x + ln_r;
            let g2 = l2 + s / (x * x);
            let g3 = l3 - 2.0 * s / (x * x * x);
            let fx = f(x);
            (fx, fx * g1, fx * (g3 + 3.0 * g1 * g2 + g1 * g1 * g1))
        };
        let mut big_n = head_end.max(512);
        loop {
            let x = big_n as f64;
            let (fx, _, f3) = derivs(x);
            let rate = (s.abs() + 5.0) / x + ln_r.abs();
            let remainder = fx * rate.powi(5) / 30_000.0 + (f3 / 720.0).abs() * 1e-3;
            if remainder < 0.1 * tol || big_n >= 1 << 22 {
                break;
            }
            big_n *= 2;
        }
        for n in head_end..big_n {
            acc.add(f(n as f64));
        }
        let x = big_n as f64;
        let (fx, f1, f3) = derivs(x);
        let integral = if boundary && self.slow.log_exponent() == 0.0 {
            self.slow.coefficient() * x.powf(1.0 - s) / (s - 1.0)
        } else {
            // x = N e^u
            let g = |u: f64| {
                let y = x * u.exp();
                f(y) * y
            };
            integrate_tail(g, 0.0, 1.0, 0.05 * tol).value
        };
        acc.add(integral);
        acc.add(0.5 * fx - f1 / 12.0 + f3 / 720.0);
        acc.value()
    }
}

fn check_weight(x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidWeights(format!(
            "weights must be finite and nonnegative, got {x}"
        )))
    }
}

#[inline]
fn scale(c: f64, n: usize, t: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else if n == 0 {
        c
    } else {
        (c.ln() + n as f64 * t.ln()).exp()
    }
}

#[inline]
fn moment_factor(n: usize, k: u32) -> f64 {
    if k == 0 {
        1.0
    } else {
        (n as f64).powi(k as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeightSequence {
    Explicit(Vec<f64>),
    ClosedForm(ClosedForm),
}

impl From<ClosedForm> for WeightSequence {
    fn from(cf: ClosedForm) -> Self {
        WeightSequence::ClosedForm(cf)
    }
}

impl WeightSequence {
    pub fn explicit(coeffs: Vec<f64>) -> Result<Self> {
        for &c in &coeffs {
            check_weight(c)?;
        }
        Ok(WeightSequence::Explicit(coeffs))
    }

    /// The identity series `V(z) = z`.
    pub fn identity() -> Self {
        WeightSequence::Explicit(vec![0.0, 1.0])
    }

    pub fn closed_form(&self) -> Option<&ClosedForm> {
        match self {
            WeightSequence::ClosedForm(cf) => Some(cf),
            WeightSequence::Explicit(_) => None,
        }
    }

    pub fn term(&self, n: usize) -> f64 {
        match self {
            WeightSequence::Explicit(c) => c.get(n).copied().unwrap_or(0.0),
            WeightSequence::ClosedForm(cf) => cf.raw_term(n),
        }
    }

    /// `term(n) * t^n`, evaluated without forming `t^n` on its own.
    pub fn scaled_term(&self, n: usize, t: f64) -> f64 {
        match self {
            WeightSequence::Explicit(c) => scale(c.get(n).copied().unwrap_or(0.0), n, t),
            WeightSequence::ClosedForm(cf) => cf.scaled_term(n, t),
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            WeightSequence::Explicit(_) => f64::INFINITY,
            WeightSequence::ClosedForm(cf) => cf.rho,
        }
    }

    /// `w_i -> w_i t^i`.
    pub fn tilt(&self, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tilt factor must be positive, got {t}"
            )));
        }
        Ok(match self {
            WeightSequence::Explicit(c) => WeightSequence::Explicit(
                c.iter().enumerate().map(|(n, &x)| scale(x, n, t)).collect(),
            ),
            WeightSequence::ClosedForm(cf) => {
                let mut out = cf.clone();
                out.rho = cf.rho / t;
                for (&n, x) in out.overrides.iter_mut() {
                    *x = scale(*x, n, t);
                }
                WeightSequence::ClosedForm(out)
            }
        })
    }

    /// `sum_n term(n) t^n`, `+inf` when divergent.
    pub fn series_value(&self, t: f64, tol: f64) -> f64 {
        self.weighted_moment(t, 0, tol)
    }

    /// `sum_n n^k term(n) t^n`, `+inf` when divergent.
    pub fn weighted_moment(&self, t: f64, k: u32, tol: f64) -> f64 {
        assert!(t >= 0.0, "series evaluated at negative argument {t}");
        match self {
            WeightSequence::Explicit(c) => c
                .iter()
                .enumerate()
                .map(|(n, &x)| moment_factor(n, k) * scale(x, n, t))
                .collect::<CompensatedSum>()
                .value(),
            WeightSequence::ClosedForm(cf) => cf.series(t, k, tol),
        }
    }

    /// Same as [`series_value`](Self::series_value) but divergence is an error.
    pub fn try_series_value(&self, t: f64, tol: f64) -> Result<f64> {
        let v = self.series_value(t, tol);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Divergent { t })
        }
    }

    /// Smallest index with a positive weight, searching `0..limit`.
    pub fn min_support(&self, limit: usize) -> Option<usize> {
        (0..limit).find(|&n| self.term(n) > 0.0)
    }

    /// gcd of the indices `n < limit` with positive weight.
    pub fn support_gcd(&self, limit: usize) -> usize {
        (0..limit).filter(|&n| self.term(n) > 0.0).fold(0, gcd)
    }

    /// Derivative series `sum_n n term(n) t^{n-1}`.
    pub fn derivative_value(&self, t: f64, tol: f64) -> f64 {
        if t == 0.0 {
            return self.term(1);
        }
        self.weighted_moment(t, 1, tol * t) / t
    }
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// A composition scheme `U = V(W)`, optionally extended by a prefactor `H`
/// (`H(z) V(W(z))`) or replaced by a product `W_1 ... W_l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub v: WeightSequence,
    pub w: WeightSequence,
    pub h: Option<WeightSequence>,
    pub product_factors: Option<Vec<WeightSequence>>,
}

impl SchemeSpec {
    pub fn new(v: WeightSequence, w: WeightSequence) -> Result<Self> {
        if v.term(0) != 0.0 {
            return Err(Error::InvalidWeights(format!(
                "V must start at i = 1, found v_0 = {}",
                v.term(0)
            )));
        }
        Ok(Self {
            v,
            w,
            h: None,
            product_factors: None,
        })
    }

    pub fn with_prefactor(mut self, h: WeightSequence) -> Self {
        self.h = Some(h);
        self
    }

    pub fn with_product(mut self, factors: Vec<WeightSequence>) -> Self {
        self.product_factors = Some(factors);
        self
    }

    /// Replace `w` by its tilt; the Gibbs partition law is unchanged.
    pub fn tilted(&self, t: f64) -> Result<Self> {
        Ok(Self {
            w: self.w.tilt(t)?,
            ..self.clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn zeta(s: f64) -> f64 {
        // Euler–Maclaurin with many correction terms; independent of the code under test.
        let n = 50usize;
        let mut acc = 0.0;
        for k in 1..n {
            acc += (k as f64).powf(-s);
        }
        let x = n as f64;
        acc += x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
        let b = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0];
        let mut fact = 1.0;
        let mut rising = s;
        for (j, bj) in b.iter().enumerate() {
            let k = 2 * (j + 1);
            fact *= (k - 1) as f64 * k as f64;
            acc += bj / fact * rising * x.powf(-s - (k as f64) + 1.0);
            rising *= (s + k as f64 - 1.0) * (s + k as f64);
        }
        acc
    }

    fn power(e: f64, rho: f64) -> WeightSequence {
        ClosedForm::power(1.0, e, rho).unwrap().into()
    }

    #[test]
    fn zeta_oracle_sanity() {
        assert!((zeta(2.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-13);
        assert!((zeta(4.0) - std::f64::consts::PI.powi(4) / 90.0).abs() < 1e-13);
    }

    #[test]
    fn term_examples() {
        let e = WeightSequence::explicit(vec![0.0, 1.0, 0.5]).unwrap();
        assert_eq!(e.term(2), 0.5);
        assert_eq!(power(4.0, 1.0).term(2), 0.0625);
        let o: WeightSequence = ClosedForm::power(1.0, 1.5, 1.0)
            .unwrap()
            .with_override(1, 0.0)
            .unwrap()
            .into();
        assert_eq!(o.term(1), 0.0);
        assert!(o.term(2) > 0.0);
    }

    #[test]
    fn radius_examples() {
        assert_eq!(power(4.0, 1.0).radius(), 1.0);
        assert_eq!(power(4.0, 0.5).radius(), 0.5);
        assert_eq!(
            WeightSequence::explicit(vec![1.0, 2.0, 3.0])
                .unwrap()
                .radius(),
            f64::INFINITY
        );
    }

    #[test]
    fn tilt_examples() {
        let e = WeightSequence::explicit(vec![0.0, 1.0, 1.0]).unwrap();
        assert_eq!(e.tilt(1.0).unwrap(), e);
        assert_eq!(
            e.tilt(2.0).unwrap(),
            WeightSequence::explicit(vec![0.0, 2.0, 4.0]).unwrap()
        );
        assert_eq!(power(3.0, 1.0).tilt(0.5).unwrap(), power(3.0, 2.0));
    }

    #[test]
    fn zeta_values_at_the_boundary() {
        let tol = 1e-13;
        let z4 = power(4.0, 1.0).series_value(1.0, tol);
        assert!((z4 - zeta(4.0)).abs() < tol, "{z4}");
        assert!((z4 - 1.082_323_2).abs() < 1e-7);
        let z32 = power(1.5, 1.0).series_value(1.0, tol);
        assert!(
            (z32 - zeta(1.5)).abs() < 10.0 * tol,
            "{z32} vs {}",
            zeta(1.5)
        );
        assert!((z32 - 2.612_375_3).abs() < 1e-7);
    }

    #[test]
    fn moments_at_the_boundary() {
        let tol = 1e-13;
        let s = power(4.0, 1.0);
        let m1 = s.weighted_moment(1.0, 1, tol);
        assert!((m1 - zeta(3.0)).abs() < 10.0 * tol);
        assert!((m1 - 1.202_056_9).abs() < 1e-7);
        assert_eq!(s.weighted_moment(1.0, 0, tol), s.series_value(1.0, tol));
        assert_eq!(power(1.5, 1.0).weighted_moment(1.0, 1, tol), f64::INFINITY);
    }

    #[test]
    fn divergence_and_origin() {
        let s = power(2.0, 1.0);
        assert_eq!(s.series_value(1.5, 1e-12), f64::INFINITY);
        assert_eq!(power(1.0, 1.0).series_value(1.0, 1e-12), f64::INFINITY);
        let z: WeightSequence = ClosedForm::power(1.0, 2.0, 1.0)
            .unwrap()
            .with_zero_term(0.25)
            .unwrap()
            .into();
        assert_eq!(z.series_value(0.0, 1e-12), 0.25);
    }

    #[test]
    fn interior_point_matches_brute_force() {
        let s = power(1.5, 1.0);
        let t: f64 = 0.999;
        let brute: f64 = (1..400_000)
            .map(|n| (n as f64).powf(-1.5) * t.powi(n))
            .sum();
        let v = s.series_value(t, 1e-13);
        assert!((v - brute).abs() < 1e-10, "{v} {brute}");
        let t: f64 = 0.5;
        let brute: f64 = (1..200).map(|n| (n as f64).powf(-1.5) * t.powi(n)).sum();
        assert!((s.series_value(t, 1e-14) - brute).abs() < 1e-14);
    }

    #[test]
    fn log_power_boundary_sum() {
        // sum log(2+n)^2 n^{-3}: brute force head plus a loose integral tail
        let s: WeightSequence = ClosedForm::new(
            SlowVarying::LogPower {
                c: 1.0,
                lambda: 2.0,
            },
            3.0,
            1.0,
        )
        .unwrap()
        .into();
        let v = s.series_value(1.0, 1e-12);
        let f = |x: f64| (2.0 + x).ln().powi(2) * x.powi(-3);
        let head: f64 = (1..200_000).map(|n| f(n as f64)).sum();
        let x = 200_000.0f64;
        // int_x^inf log(x)^2 x^-3 ~ log(x)^2/(2x^2)
        let tail = (x.ln().powi(2) / (2.0 * x * x)) * (1.0 + 1.0 / x.ln());
        assert!((v - head - tail).abs() < 1e-9, "{v} {}", head + tail);
    }

    #[test]
    fn start_index_and_overrides_shift_the_sum() {
        let base = power(4.0, 1.0);
        let shifted: WeightSequence = ClosedForm::power(1.0, 4.0, 1.0).unwrap().start_at(3).into();
        let d = base.series_value(1.0, 1e-14) - shifted.series_value(1.0, 1e-14);
        assert!((d - (1.0 + 1.0f64 / 16.0)).abs() < 1e-13);
        let o: WeightSequence = ClosedForm::power(1.0, 4.0, 1.0)
            .unwrap()
            .with_override(700, 1.0)
            .unwrap()
            .into();
        let d = o.series_value(1.0, 1e-14) - base.series_value(1.0, 1e-14);
        assert!((d - (1.0 - 700f64.powi(-4))).abs() < 1e-13);
    }

    #[test]
    fn support_helpers() {
        let w = WeightSequence::explicit(vec![0.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(w.min_support(10), Some(2));
        assert_eq!(w.support_gcd(10), 2);
        assert_eq!(power(3.0, 1.0).support_gcd(1000), 1);
    }

    #[test]
    fn scheme_rejects_v0() {
        let v = WeightSequence::explicit(vec![1.0, 1.0]).unwrap();
        assert!(SchemeSpec::new(v, power(3.0, 1.0)).is_err());
    }

    proptest! {
        #[test]
        fn tilt_scales_terms(t in 0.01f64..2.0, e in 0.5f64..5.0, n in 0usize..1000) {
            let s = power(e, 1.3);
            let lhs = s.tilt(t).unwrap().term(n);
            let rhs = s.term(n) * t.powi(n as i32);
            prop_assert!((lhs - rhs).abs() <= 1e-11 * rhs.abs() + 1e-300, "{} {}", lhs, rhs);
            let ex = WeightSequence::explicit((0..30).map(|i| 1.0 / (1.0 + i as f64)).collect()).unwrap();
            let m = n % 30;
            let lhs = ex.tilt(t).unwrap().term(m);
            let rhs = ex.term(m) * t.powi(m as i32);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
        }

        #[test]
        fn tilt_commutes_with_series(t in 0.1f64..2.0, x in 0.05f64..1.0, e in 1.2f64..4.0) {
            let s = power(e, 1.0);
            let tol = 1e-12;
            let x = x / t; // keep t x inside the disc
            let a = s.tilt(t).unwrap().series_value(x, tol);
            let b = s.series_value(t * x, tol);
            prop_assert!((a - b).abs() <= 2.0 * tol + 1e-13 * b.abs(), "{} {}", a, b);
        }

        #[test]
        fn series_is_monotone(t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
            let s = power(2.5, 1.0);
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(s.series_value(lo, 1e-13) <= s.series_value(hi, 1e-13) + 1e-13);
        }
    }
}
