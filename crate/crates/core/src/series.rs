//! Truncated power series, used as an independent path to `u_n = [z^n] V(W(z))`.

use crate::error::{Error, Result};
use crate::weights::WeightSequence;

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    pub coeffs: Vec<f64>,
}

impl TruncatedSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(
            !coeffs.is_empty(),
            "a truncation keeps at least the constant term"
        );
        Self { coeffs }
    }

    pub fn from_weights(seq: &WeightSequence, n_max: usize) -> Self {
        Self::new((0..=n_max).map(|n| seq.term(n)).collect())
    }

    pub fn constant(c: f64, n_max: usize) -> Self {
        let mut coeffs = vec![0.0; n_max + 1];
        coeffs[0] = c;
        Self { coeffs }
    }

    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> f64 {
        self.coeffs.get(n).copied().unwrap_or(0.0)
    }

    /// Cauchy product truncated at `n_max`, summed left to right in `i`.
    pub fn mul(&self, other: &Self, n_max: usize) -> Self {
        let mut out = vec![0.0; n_max + 1];
        for (n, slot) in out.iter_mut().enumerate() {
            let lo = n.saturating_sub(other.n_max());
            let hi = n.min(self.n_max());
            let mut acc = 0.0;
            for i in lo..=hi {
                acc += self.coeffs[i] * other.coeffs[n - i];
            }
            *slot = acc;
        }
        Self { coeffs: out }
    }

    fn add_constant(mut self, c: f64) -> Self {
        self.coeffs[0] += c;
        self
    }
}

/// `[z^n] V(W(z))` for `n <= n_max`, by Horner's scheme in `W`.
pub fn compose(v: &WeightSequence, w: &WeightSequence, n_max: usize) -> Result<TruncatedSeries> {
    let w0 = w.term(0);
    if w0 != 0.0 {
        return Err(Error::NonzeroConstantTerm(w0));
    }
    let ws = TruncatedSeries::from_weights(w, n_max);
    // V(W) = W (v_1 + W (v_2 + ... + W v_{n_max}))
    let mut acc = TruncatedSeries::constant(v.term(n_max.max(1)), n_max);
    for i in (1..n_max.max(1)).rev() {
        acc = ws.mul(&acc, n_max).add_constant(v.term(i));
    }
    let mut out = ws.mul(&acc, n_max);
    out.coeffs[0] += v.term(0);
    Ok(out)
}

/// `[z^n] W(z)^ell`.
pub fn pow_coeff(w: &WeightSequence, ell: usize, n: usize) -> f64 {
    let ws = TruncatedSeries::from_weights(w, n);
    let mut acc = TruncatedSeries::constant(1.0, n);
    for _ in 0..ell {
        acc = acc.mul(&ws, n);
    }
    acc.coeff(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::ClosedForm;
    use proptest::prelude::*;

    fn exp_minus_one(n: usize) -> WeightSequence {
        let mut c = vec![0.0; n + 1];
        let mut f = 1.0;
        for (i, slot) in c.iter_mut().enumerate().skip(1) {
            f /= i as f64;
            *slot = f;
        }
        WeightSequence::explicit(c).unwrap()
    }

    // Bell numbers from the triangle recurrence, independent of the series code.
    fn bell(n: usize) -> f64 {
        let mut row = vec![1u64];
        for _ in 0..n {
            let mut next = vec![*row.last().unwrap()];
            for &x in &row {
                next.push(next.last().unwrap() + x);
            }
            row = next;
        }
        row[0] as f64
    }

    #[test]
    fn mul_examples() {
        let a = TruncatedSeries::new(vec![1.0, 1.0]);
        assert_eq!(a.mul(&a, 2).coeffs, vec![1.0, 2.0, 1.0]);
        let b = TruncatedSeries::new(vec![0.0, 1.0, 1.0]);
        assert_eq!(b.mul(&b, 3).coeff(3), 2.0);
        let one = TruncatedSeries::constant(1.0, 2);
        assert_eq!(b.mul(&one, 2), b);
    }

    #[test]
    fn bell_scheme_partition_function() {
        let w = exp_minus_one(12);
        let u = compose(&w, &w, 10).unwrap();
        assert!((u.coeff(3) - 5.0 / 6.0).abs() < 1e-15);
        assert!((u.coeff(4) - 15.0 / 24.0).abs() < 1e-15);
        let mut fact = 1.0;
        for n in 1..=10 {
            fact *= n as f64;
            assert!((u.coeff(n) * fact / bell(n) - 1.0).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn identity_outer_series() {
        let w: WeightSequence = ClosedForm::power(1.0, 3.0, 1.0).unwrap().into();
        let u = compose(&WeightSequence::identity(), &w, 20).unwrap();
        for n in 0..=20 {
            assert_eq!(u.coeff(n), w.term(n));
        }
    }

    #[test]
    fn compose_rejects_w0() {
        let w = WeightSequence::explicit(vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            compose(&w, &w, 3),
            Err(Error::NonzeroConstantTerm(_))
        ));
    }

    #[test]
    fn pow_coeff_examples() {
        let w = WeightSequence::explicit(vec![0.0, 1.0, 1.0]).unwrap();
        assert_eq!(pow_coeff(&w, 2, 3), 2.0);
        assert_eq!(pow_coeff(&w, 1, 2), 1.0);
        assert_eq!(pow_coeff(&w, 5, 4), 0.0);
    }

    #[test]
    fn compose_tilts_coefficientwise() {
        let v: WeightSequence = ClosedForm::power(1.0, 2.0, 1.2).unwrap().into();
        let w: WeightSequence = ClosedForm::power(1.0, 4.0, 1.0).unwrap().into();
        for t in [0.5, 2.0] {
            let a = compose(&v, &w.tilt(t).unwrap(), 100).unwrap();
            let b = compose(&v, &w, 100).unwrap();
            for n in 1..=100 {
                let expect = b.coeff(n) * t.powi(n as i32);
                assert!(
                    (a.coeff(n) - expect).abs() <= 1e-12 * expect,
                    "n = {n}, t = {t}"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn mul_commutes_and_associates(
            a in prop::collection::vec(0.0f64..1.0, 1..12),
            b in prop::collection::vec(0.0f64..1.0, 1..12),
            c in prop::collection::vec(0.0f64..1.0, 1..12),
        ) {
            let (a, b, c) = (TruncatedSeries::new(a), TruncatedSeries::new(b), TruncatedSeries::new(c));
            let ab = a.mul(&b, 15);
            let ba = b.mul(&a, 15);
            for n in 0..=15 {
                prop_assert!((ab.coeff(n) - ba.coeff(n)).abs() <= 1e-12);
            }
            let l = a.mul(&b, 15).mul(&c, 15);
            let r = a.mul(&b.mul(&c, 15), 15);
            for n in 0..=15 {
                prop_assert!((l.coeff(n) - r.coeff(n)).abs() <= 1e-12 * (1.0 + l.coeff(n)));
            }
        }
    }
}
