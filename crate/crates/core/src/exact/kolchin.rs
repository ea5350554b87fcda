use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numeric::special::ln_factorial;
use crate::numeric::sum::{sum, CompensatedSum};
use crate::phase::solve_rho_u;
use crate::weights::{SchemeSpec, DEFAULT_TOL};

use super::law::DiscreteLaw;
use super::table::ConvolutionTable;

/// Certified tail of `N` when `X` can vanish.
const N_TAIL: f64 = 1e-14;

/// The Kolchin representation of a scheme at `rho`, tabulated up to size `n`:
/// `P(X = k) = w_k rho^k / W(rho)`, `P(N = l) = v_l W(rho)^l / V(W(rho))` and
/// the sizes of a Gibbs partition of `[m]` are `(X_1, ..., X_N)` given `S_N = m`.
#[derive(Debug, Clone)]
pub struct Kolchin {
    pub rho: f64,
    /// `W(rho)`
    pub w_rho: f64,
    /// `V(W(rho))`
    pub v_w: f64,
    pub n: usize,
    pub law_x: DiscreteLaw,
    pub law_n: DiscreteLaw,
    /// `E[N]`, from the series when it converges
    pub mean_n: f64,
    pub table: ConvolutionTable,
    /// `P(S_N = m)` for `m <= n`
    pub stopped: Vec<f64>,
}

/// `rho` for the Kolchin representation: `rho_u` when finite, otherwise the
/// Boltzmann parameter with `E[S_N] = n` so that `P(S_N = n)` is not tiny.
pub fn kolchin_rho(scheme: &SchemeSpec, n: usize) -> Result<f64> {
    if let Ok(r) = solve_rho_u(scheme) {
        if r.is_finite() && r > 0.0 {
            return Ok(r);
        }
    }
    let mean = |t: f64| -> f64 {
        let w = scheme.w.series_value(t, DEFAULT_TOL);
        if !w.is_finite() {
            return f64::INFINITY;
        }
        let mx = scheme.w.weighted_moment(t, 1, DEFAULT_TOL) / w;
        let vw = scheme.v.series_value(w, DEFAULT_TOL);
        let mn = scheme.v.weighted_moment(w, 1, DEFAULT_TOL) / vw;
        let m = mx * mn;
        if m.is_nan() {
            f64::INFINITY
        } else {
            m
        }
    };
    let target = n.max(1) as f64;
    let (mut lo, mut hi) = (-30.0f64, 30.0f64);
    if !(mean(lo.exp()) < target && mean(hi.exp()) > target) {
        return Err(Error::RootFinding(format!(
            "no Boltzmann parameter with mean size {n}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(mid.exp()) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

impl Kolchin {
    pub fn new(scheme: &SchemeSpec, n: usize) -> Result<Self> {
        Self::with_rho(scheme, kolchin_rho(scheme, n)?, n)
    }

    pub fn with_rho(scheme: &SchemeSpec, rho: f64, n: usize) -> Result<Self> {
        let law_x = law_x(scheme, rho, n)?;
        let w_rho = scheme.w.try_series_value(rho, DEFAULT_TOL)?;
        let v_w = scheme.v.try_series_value(w_rho, DEFAULT_TOL)?;
        if v_w <= 0.0 {
            return Err(Error::ZeroPartitionFunction(0));
        }
        let s0 = law_x
            .pmf
            .iter()
            .position(|&p| p > 0.0)
            .ok_or_else(|| Error::InvalidWeights(format!("w vanishes on 0..={n}")))?;
        let ell_max = match n.checked_div(s0) {
            Some(l) => l,
            None => certified_ell_max(scheme, w_rho, v_w, 4 * n.max(1))?,
        };
        let law_n = DiscreteLaw::new(
            (0..=ell_max)
                .map(|l| scheme.v.scaled_term(l, w_rho) / v_w)
                .collect(),
        );
        let mean_n = {
            let m = scheme.v.weighted_moment(w_rho, 1, DEFAULT_TOL) / v_w;
            if m.is_finite() {
                m
            } else {
                f64::INFINITY
            }
        };
        let table = ConvolutionTable::new(&law_x.pmf, ell_max, n)?;
        let stopped = (0..=n)
            .map(|m| {
                let mut acc = CompensatedSum::new();
                for l in 0..=table.ell_max().min(ell_max) {
                    let p = law_n.prob(l);
                    if p > 0.0 {
                        acc.add(p * table.get(l, m));
                    }
                }
                acc.value()
            })
            .collect();
        Ok(Self {
            rho,
            w_rho,
            v_w,
            n,
            law_x,
            law_n,
            mean_n,
            table,
            stopped,
        })
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if n > self.n {
            return Err(Error::InvalidArgument(format!(
                "tabulated up to n = {}, asked for {n}",
                self.n
            )));
        }
        if !(self.stopped[n] > 0.0) {
            return Err(Error::ZeroPartitionFunction(n));
        }
        Ok(())
    }

    /// `u_m = V(W(rho)) rho^{-m} P(S_N = m)`.
    pub fn partition_function(&self, m: usize) -> f64 {
        if self.stopped[m] == 0.0 {
            return 0.0;
        }
        (self.v_w.ln() - m as f64 * self.rho.ln() + self.stopped[m].ln()).exp()
    }

    /// `P(N_n = l) = P(N = l) P(S_l = n) / P(S_N = n)`.
    pub fn law_nn(&self, n: usize) -> Result<DiscreteLaw> {
        self.check_n(n)?;
        let ell_max = self.table.ell_max().min(self.law_n.len() - 1);
        let pmf = (0..=ell_max)
            .map(|l| self.law_n.prob(l) * self.table.get(l, n) / self.stopped[n])
            .collect();
        Ok(DiscreteLaw::new(trim(pmf)))
    }

    /// `P(N^ = l) = l P(N = l) / E[N]`.
    pub fn law_nhat(&self) -> Result<DiscreteLaw> {
        if !self.mean_n.is_finite() {
            return Err(Error::Divergent { t: self.w_rho });
        }
        Ok(DiscreteLaw::new(
            self.law_n
                .pmf
                .iter()
                .enumerate()
                .map(|(l, &p)| l as f64 * p / self.mean_n)
                .collect(),
        ))
    }

    /// Law of the multiset of component sizes, keyed by sizes in decreasing order.
    pub fn size_multiset_law(&self, n: usize) -> Result<BTreeMap<Vec<usize>, f64>> {
        self.check_n(n)?;
        if n > 40 {
            return Err(Error::Budget(format!(
                "multiset law enumerates partitions of n <= 40, got {n}"
            )));
        }
        if self.law_x.prob(0) > 0.0 {
            return Err(Error::InvalidArgument("multiset law needs w_0 = 0".into()));
        }
        let mut out = BTreeMap::new();
        let mut parts = Vec::new();
        integer_partitions(n, n, &mut parts, &mut |p| {
            let l = p.len();
            let mut ln = (self.law_n.prob(l)).ln() + ln_factorial(l as u64);
            let mut run = 1u64;
            for i in 0..l {
                ln += self.law_x.prob(p[i]).ln();
                if i + 1 < l && p[i + 1] == p[i] {
                    run += 1;
                } else {
                    ln -= ln_factorial(run);
                    run = 1;
                }
            }
            let prob = (ln - self.stopped[n].ln()).exp();
            if prob > 0.0 {
                out.insert(p.to_vec(), prob);
            }
        });
        Ok(out)
    }

    /// `R_j(s) = sum_{l >= j} P(N = l) P(S_{l - j} = s)`, for `s <= n`.
    fn shifted_stopped(&self, j: usize, n: usize) -> Vec<f64> {
        let ell_max = self.table.ell_max().min(self.law_n.len() - 1);
        (0..=n)
            .map(|s| sum((j..=ell_max).map(|l| self.law_n.prob(l) * self.table.get(l - j, s))))
            .collect()
    }

    /// Exact joint law of the first `m` sizes, `m` in {1, 2}, and its distance to i.i.d. copies of `X`.
    pub fn prefix_law(&self, n: usize, m: usize) -> Result<PrefixLaw> {
        self.check_n(n)?;
        let px = |k: usize| self.law_x.prob(k);
        let z = self.stopped[n];
        match m {
            1 => {
                let r = self.shifted_stopped(1, n);
                let pmf: Vec<f64> = (0..=n).map(|k| px(k) * r[n - k] / z).collect();
                let inside = sum((0..=n).map(px));
                let l1 = sum((0..=n).map(|k| (pmf[k] - px(k)).abs()));
                let tv = 0.5 * (l1 + (1.0 - inside).max(0.0));
                Ok(PrefixLaw {
                    n,
                    m,
                    pmf,
                    absent: 0.0,
                    tv,
                })
            }
            2 => {
                let r = self.shifted_stopped(2, n);
                let side = n + 1;
                let mut pmf = vec![0.0; side * side];
                let mut l1 = CompensatedSum::new();
                let mut inside = CompensatedSum::new();
                for k1 in 0..=n {
                    for k2 in 0..=n - k1 {
                        let iid = px(k1) * px(k2);
                        let p = iid * r[n - k1 - k2] / z;
                        pmf[k1 * side + k2] = p;
                        l1.add((p - iid).abs());
                        inside.add(iid);
                    }
                }
                let absent = self.law_nn(n)?.prob(1);
                let tv = 0.5 * (l1.value() + (1.0 - inside.value()).max(0.0) + absent);
                Ok(PrefixLaw {
                    n,
                    m,
                    pmf,
                    absent,
                    tv,
                })
            }
            _ => Err(Error::InvalidArgument(format!(
                "prefix laws implemented for m <= 2, got {m}"
            ))),
        }
    }

    /// Law of `n - M_n` on `d < n/2`, where the largest size `M_n` is unique;
    /// the deficit of the returned law is `P(M_n <= n/2)`.
    pub fn giant_deficit_law(&self, n: usize) -> Result<DiscreteLaw> {
        self.check_n(n)?;
        let ell_max = self.table.ell_max().min(self.law_n.len() - 1);
        let d_max = (n - 1) / 2;
        let pmf = (0..=d_max)
            .map(|d| {
                let lead = self.law_x.prob(n - d);
                if lead == 0.0 {
                    return 0.0;
                }
                let s =
                    sum((1..=ell_max)
                        .map(|l| l as f64 * self.law_n.prob(l) * self.table.get(l - 1, d)));
                lead * s / self.stopped[n]
            })
            .collect();
        Ok(DiscreteLaw::new(pmf))
    }

    /// `E[(#{i : K_i >= k_min})_m]` for `m` in {1, 2}, the factorial moments of the number of large sizes.
    pub fn large_count_moment(&self, n: usize, k_min: usize, m: usize) -> Result<f64> {
        self.check_n(n)?;
        let k_min = k_min.max(1);
        if m == 0 || m > 2 {
            return Err(Error::InvalidArgument(format!(
                "factorial moments implemented for m in 1..=2, got {m}"
            )));
        }
        if m * k_min > n {
            return Ok(0.0);
        }
        let ell_max = self.table.ell_max().min(self.law_n.len() - 1);
        let falling = |l: usize| (0..m).map(|i| l.saturating_sub(i) as f64).product::<f64>();
        // R(s) = sum_l (l)_m P(N = l) P(S_{l - m} = s)
        let r: Vec<f64> = (0..=n - m * k_min)
            .map(|s| {
                sum((m..=ell_max)
                    .map(|l| falling(l) * self.law_n.prob(l) * self.table.get(l - m, s)))
            })
            .collect();
        let px = |k: usize| self.law_x.prob(k);
        let total = if m == 1 {
            sum((k_min..=n).map(|k| px(k) * r[n - k]))
        } else {
            let mut acc = CompensatedSum::new();
            for k1 in k_min..=n - k_min {
                for k2 in k_min..=n - k1 {
                    acc.add(px(k1) * px(k2) * r[n - k1 - k2]);
                }
            }
            acc.value()
        };
        Ok(total / self.stopped[n])
    }

    /// `sum_{i < N^} X_i` on `0..=d_max`, with `P(N^ = l) = l P(N = l) / E[N]`.
    pub fn deficit_limit_law(&self, d_max: usize) -> Result<DiscreteLaw> {
        let nhat = self.law_nhat()?;
        let d_max = d_max.min(self.n);
        let ell_max = self.table.ell_max().min(nhat.len() - 1);
        Ok(DiscreteLaw::new(
            (0..=d_max)
                .map(|d| sum((1..=ell_max).map(|l| nhat.prob(l) * self.table.get(l - 1, d))))
                .collect(),
        ))
    }
}

/// Joint law of `(K_1, ..., K_m)`. For `m = 2` the pmf is flattened as
/// `pmf[k1 * (n + 1) + k2]` and `absent` is `P(N_n < 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixLaw {
    pub n: usize,
    pub m: usize,
    pub pmf: Vec<f64>,
    pub absent: f64,
    /// distance to the law of `(X_1, ..., X_m)`, with absent coordinates as an extra atom
    pub tv: f64,
}

impl PrefixLaw {
    /// Marginal of coordinate `i` (0-based) on the event that it exists.
    pub fn marginal(&self, i: usize) -> Vec<f64> {
        let side = self.n + 1;
        match (self.m, i) {
            (1, 0) => self.pmf.clone(),
            (2, 0) => (0..side)
                .map(|a| sum((0..side).map(|b| self.pmf[a * side + b])))
                .collect(),
            (2, 1) => (0..side)
                .map(|b| sum((0..side).map(|a| self.pmf[a * side + b])))
                .collect(),
            _ => panic!("coordinate {i} out of range for m = {}", self.m),
        }
    }
}

pub(crate) fn certified_ell_max(
    scheme: &SchemeSpec,
    w_rho: f64,
    v_w: f64,
    cap: usize,
) -> Result<usize> {
    let mut acc = CompensatedSum::new();
    for l in 0..=cap {
        acc.add(scheme.v.scaled_term(l, w_rho) / v_w);
        if 1.0 - acc.value() < N_TAIL {
            return Ok(l);
        }
    }
    Err(Error::UncertifiableTail {
        ell: cap,
        residual: 1.0 - acc.value(),
    })
}

fn trim(mut pmf: Vec<f64>) -> Vec<f64> {
    while pmf.len() > 1 && *pmf.last().expect("nonempty") == 0.0 {
        pmf.pop();
    }
    pmf
}

/// Calls `f` on every partition of `n` into parts `<= max`, parts in decreasing order.
pub(crate) fn integer_partitions(
    n: usize,
    max: usize,
    parts: &mut Vec<usize>,
    f: &mut dyn FnMut(&[usize]),
) {
    if n == 0 {
        f(parts);
        return;
    }
    for p in (1..=max.min(n)).rev() {
        parts.push(p);
        integer_partitions(n - p, p, parts, f);
        parts.pop();
    }
}

/// `P(X = k) = w_k rho^k / W(rho)` for `k <= n_max`.
pub fn law_x(scheme: &SchemeSpec, rho: f64, n_max: usize) -> Result<DiscreteLaw> {
    let total = scheme.w.try_series_value(rho, DEFAULT_TOL)?;
    if total <= 0.0 {
        return Err(Error::InvalidWeights("W(rho) = 0".into()));
    }
    Ok(DiscreteLaw::new(
        (0..=n_max)
            .map(|k| scheme.w.scaled_term(k, rho) / total)
            .collect(),
    ))
}

/// `P(N = l) = v_l W(rho)^l / V(W(rho))` for `l <= ell_max`.
pub fn law_n(scheme: &SchemeSpec, rho: f64, ell_max: usize) -> Result<DiscreteLaw> {
    let w = scheme.w.try_series_value(rho, DEFAULT_TOL)?;
    let total = scheme.v.try_series_value(w, DEFAULT_TOL)?;
    Ok(DiscreteLaw::new(
        (0..=ell_max)
            .map(|l| scheme.v.scaled_term(l, w) / total)
            .collect(),
    ))
}
