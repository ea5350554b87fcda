//! Bundled schemes covering each phase, plus the controls used in tests.
//!
//! All `w` sequences live on `n >= 1` with radius 1; the critical `v`
//! sequences take `rho_v = W(1)`.

use crate::weights::{ClosedForm, SchemeSpec, WeightSequence, DEFAULT_TOL};

pub const NAMES: &[&str] = &[
    "bell",
    "A",
    "B",
    "C",
    "D",
    "E",
    "identity",
    "product_symmetric",
    "product_lighter",
    "extended_small_h",
    "extended_large_h",
    "extended_balanced",
];

pub fn power_w(c: f64, e: f64, rho: f64) -> WeightSequence {
    ClosedForm::power(c, e, rho)
        .expect("valid closed form")
        .into()
}

pub fn power_v(c: f64, e: f64, rho: f64) -> WeightSequence {
    power_w(c, e, rho)
}

/// `v_n = c n^{-b} W(rho_w)^{-n}`, a critical outer sequence for `w`.
pub fn critical_scheme(w: WeightSequence, c: f64, b: f64) -> SchemeSpec {
    let rho_v = w.series_value(w.radius(), DEFAULT_TOL);
    SchemeSpec::new(power_v(c, b, rho_v), w).expect("v_0 = 0")
}

/// `v_i = w_i = 1/i!`: set partitions counted by Bell numbers.
pub fn bell() -> SchemeSpec {
    let mut coeffs = vec![0.0; 171];
    let mut f = 1.0;
    for (i, slot) in coeffs.iter_mut().enumerate().skip(1) {
        f /= i as f64;
        *slot = f;
    }
    let w = WeightSequence::explicit(coeffs).expect("nonnegative");
    SchemeSpec::new(w.clone(), w).expect("v_0 = 0")
}

/// Dense critical, `alpha = 2`, finite variance.
pub fn scheme_a() -> SchemeSpec {
    critical_scheme(power_w(1.0, 4.0, 1.0), 1.0, 2.0)
}

/// Dense critical, `alpha = 3/2`.
pub fn scheme_b() -> SchemeSpec {
    critical_scheme(power_w(1.0, 2.5, 1.0), 1.0, 1.5)
}

/// Convergent with a giant component.
pub fn scheme_c() -> SchemeSpec {
    critical_scheme(power_w(1.0, 1.5, 1.0), 1.0, 3.0)
}

/// Mixture, `a = b = 3`.
pub fn scheme_d() -> SchemeSpec {
    critical_scheme(power_w(1.0, 3.0, 1.0), 1.0, 3.0)
}

/// Dilute, `alpha = 1/2`.
pub fn scheme_e() -> SchemeSpec {
    critical_scheme(power_w(1.0, 1.5, 1.0), 1.0, 1.5)
}

/// `V(z) = z`: a single component.
pub fn identity_control() -> SchemeSpec {
    SchemeSpec::new(WeightSequence::identity(), power_w(1.0, 3.0, 1.0)).expect("v_0 = 0")
}

/// `W(z)^2` with `w_n = n^{-3}`.
pub fn product_symmetric() -> SchemeSpec {
    let w = power_w(1.0, 3.0, 1.0);
    SchemeSpec::new(WeightSequence::identity(), w.clone())
        .expect("v_0 = 0")
        .with_product(vec![w.clone(), w])
}

/// `W_1 W_2` with `W_2` lighter tailed, so the first coordinate carries the mass.
pub fn product_lighter() -> SchemeSpec {
    let w1 = power_w(1.0, 3.0, 1.0);
    let w2 = power_w(1.0, 4.0, 1.0);
    SchemeSpec::new(WeightSequence::identity(), w1.clone())
        .expect("v_0 = 0")
        .with_product(vec![w1, w2])
}

/// Scheme A with `h_n = n^{-4}`, negligible against `u_n ~ c n^{-2}`.
pub fn extended_small_h() -> SchemeSpec {
    scheme_a().with_prefactor(extended_h(4.0))
}

/// Scheme A with `h_n = n^{-3/2}`, which dominates `u_n`.
pub fn extended_large_h() -> SchemeSpec {
    scheme_a().with_prefactor(extended_h(1.5))
}

/// Scheme A with `h_n = n^{-2}`, of the same order as `u_n`.
pub fn extended_balanced() -> SchemeSpec {
    scheme_a().with_prefactor(extended_h(2.0))
}

// h_0 = 1 keeps H(0) > 0 so small n are admissible.
fn extended_h(e: f64) -> WeightSequence {
    ClosedForm::power(1.0, e, 1.0)
        .and_then(|c| c.with_zero_term(1.0))
        .expect("valid closed form")
        .into()
}

pub fn by_name(name: &str) -> Option<SchemeSpec> {
    Some(match name {
        "bell" => bell(),
        "A" => scheme_a(),
        "B" => scheme_b(),
        "C" => scheme_c(),
        "D" => scheme_d(),
        "E" => scheme_e(),
        "identity" => identity_control(),
        "product_symmetric" => product_symmetric(),
        "product_lighter" => product_lighter(),
        "extended_small_h" => extended_small_h(),
        "extended_large_h" => extended_large_h(),
        "extended_balanced" => extended_balanced(),
        _ => return None,
    })
}
