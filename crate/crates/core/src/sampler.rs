//! Exact samplers for the component sizes of Gibbs partitions and product structures.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{certified_ell_max, kolchin_rho, law_n, law_x, Kolchin, ProductLaw};
use crate::weights::{SchemeSpec, DEFAULT_TOL};

/// Default cap on the number of proposals of the rejection sampler.
pub const MAX_ATTEMPTS: u64 = 1_000_000_000;

/// Component sizes `K_1, ..., K_{N_n}` of one partition of `[n]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartitionSample {
    pub n: usize,
    pub sizes: Vec<usize>,
}

impl PartitionSample {
    pub fn n_components(&self) -> usize {
        self.sizes.len()
    }
}

/// Stream `replicate` of `seed`; replicates are independent and individually reproducible.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Smallest index whose cumulative mass exceeds `u`, `None` past the end.
fn inverse_cdf(cdf: &[f64], u: f64) -> Option<usize> {
    let i = cdf.partition_point(|&c| c <= u);
    (i < cdf.len()).then_some(i)
}

fn cumulative(pmf: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    pmf.iter()
        .map(|&p| {
            acc += p;
            acc
        })
        .collect()
}

/// Balls in boxes: draw `N_n`, then split the total recursively in halves,
/// the split point of `S_c = r` into `S_{c1} + S_{c2}` having law
/// `P(S_{c1} = t) P(S_{c2} = r - t) / P(S_c = r)`.
#[derive(Debug, Clone)]
pub struct ExactSampler<'a> {
    kolchin: &'a Kolchin,
    n: usize,
    cdf_nn: Vec<f64>,
}

impl<'a> ExactSampler<'a> {
    pub fn new(kolchin: &'a Kolchin, n: usize) -> Result<Self> {
        let law = kolchin.law_nn(n)?;
        Ok(Self {
            kolchin,
            n,
            cdf_nn: cumulative(&law.pmf),
        })
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> PartitionSample {
        let total = *self.cdf_nn.last().expect("nonempty law");
        let u: f64 = rng.random();
        let ell = inverse_cdf(&self.cdf_nn, u * total).unwrap_or(self.cdf_nn.len() - 1);
        let mut sizes = Vec::with_capacity(ell);
        self.split(ell, self.n, rng, &mut sizes);
        PartitionSample { n: self.n, sizes }
    }

    fn split<R: Rng>(&self, c: usize, r: usize, rng: &mut R, out: &mut Vec<usize>) {
        if c == 1 {
            out.push(r);
            return;
        }
        let t = &self.kolchin.table;
        let (c1, c2) = (c / 2, c - c / 2);
        let s0 = t.s0;
        let target = rng.random::<f64>() * t.get(c, r);
        let mut acc = 0.0;
        let mut last = None;
        let mut chosen = None;
        for x in c1 * s0..=r - c2 * s0 {
            let w = t.get(c1, x) * t.get(c2, r - x);
            if w > 0.0 {
                acc += w;
                last = Some(x);
                if acc > target {
                    chosen = Some(x);
                    break;
                }
            }
        }
        let x = chosen
            .or(last)
            .expect("P(S_c = r) > 0 leaves a feasible split");
        self.split(c1, x, rng, out);
        self.split(c2, r - x, rng, out);
    }
}

/// Exact sample via the convolution table; builds the table on every call.
pub fn sample_exact(scheme: &SchemeSpec, n: usize, seed: u64) -> Result<PartitionSample> {
    let k = Kolchin::new(scheme, n)?;
    Ok(ExactSampler::new(&k, n)?.draw(&mut replicate_rng(seed, 0)))
}

/// Proposals `(X_1, ..., X_N)` accepted when they sum to `n`.
#[derive(Debug, Clone)]
pub struct RejectionSampler {
    n: usize,
    s0: usize,
    cdf_n: Vec<f64>,
    cdf_x: Vec<f64>,
    pub max_attempts: u64,
}

/// Proposal counts of a rejection run; `accepted / attempts` estimates `P(S_N = n)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Acceptance {
    pub attempts: u64,
    pub accepted: u64,
}

impl Acceptance {
    pub fn rate(&self) -> f64 {
        self.accepted as f64 / self.attempts as f64
    }
}

impl RejectionSampler {
    pub fn new(scheme: &SchemeSpec, n: usize) -> Result<Self> {
        let rho = kolchin_rho(scheme, n)?;
        let lx = law_x(scheme, rho, n)?;
        let s0 = lx
            .pmf
            .iter()
            .position(|&p| p > 0.0)
            .ok_or_else(|| Error::InvalidWeights(format!("w vanishes on 0..={n}")))?;
        let ell_max = if let Some(l) = n.checked_div(s0) {
            l
        } else {
            let w = scheme.w.try_series_value(rho, DEFAULT_TOL)?;
            let v = scheme.v.try_series_value(w, DEFAULT_TOL)?;
            certified_ell_max(scheme, w, v, 4 * n.max(1))?
        };
        let ln = law_n(scheme, rho, ell_max)?;
        Ok(Self {
            n,
            s0,
            cdf_n: cumulative(&ln.pmf),
            cdf_x: cumulative(&lx.pmf),
            max_attempts: MAX_ATTEMPTS,
        })
    }

    /// One proposal; `None` when rejected.
    fn propose<R: Rng>(&self, rng: &mut R, sizes: &mut Vec<usize>) -> bool {
        sizes.clear();
        let Some(ell) = inverse_cdf(&self.cdf_n, rng.random()) else {
            return false;
        };
        if ell == 0 || ell * self.s0 > self.n {
            return false;
        }
        let mut total = 0;
        for i in 0..ell {
            let Some(k) = inverse_cdf(&self.cdf_x, rng.random()) else {
                return false;
            };
            total += k;
            if total + (ell - i - 1) * self.s0 > self.n {
                return false;
            }
            sizes.push(k);
        }
        total == self.n
    }

    pub fn draw<R: Rng>(&self, rng: &mut R, log: &mut Acceptance) -> Result<PartitionSample> {
        let mut sizes = Vec::new();
        let start = log.attempts;
        loop {
            if log.attempts - start >= self.max_attempts {
                return Err(Error::AttemptCap {
                    attempts: log.attempts,
                    accepted: log.accepted,
                });
            }
            log.attempts += 1;
            if self.propose(rng, &mut sizes) {
                log.accepted += 1;
                return Ok(PartitionSample { n: self.n, sizes });
            }
        }
    }
}

pub fn sample_rejection(scheme: &SchemeSpec, n: usize, seed: u64) -> Result<PartitionSample> {
    let s = RejectionSampler::new(scheme, n)?;
    s.draw(&mut replicate_rng(seed, 0), &mut Acceptance::default())
}

/// `(P_1, ..., P_l)` drawn coordinate by coordinate from the exact conditionals.
pub fn sample_product<R: Rng>(law: &ProductLaw, rng: &mut R) -> Vec<usize> {
    let l = law.factor_laws.len();
    let mut rem = law.n;
    let mut out = Vec::with_capacity(l);
    for k in 0..l - 1 {
        let target = rng.random::<f64>() * law.suffix[k][rem];
        let mut acc = 0.0;
        let mut pick = None;
        for j in 0..=rem {
            let w = law.factor_laws[k].prob(j) * law.suffix[k + 1][rem - j];
            if w > 0.0 {
                acc += w;
                pick = Some(j);
                if acc > target {
                    break;
                }
            }
        }
        let j = pick.expect("the conditioning event has positive probability");
        out.push(j);
        rem -= j;
    }
    out.push(rem);
    out
}

/// Constants for the centred partial-sum path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathSpec {
    pub mu: f64,
    pub alpha: f64,
    /// `L(n)`
    pub scale_l: f64,
    pub grid: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StatsRequest {
    pub counts_for: Vec<usize>,
    pub path: Option<PathSpec>,
    /// `mu` for the event `N_n >= n / (2 mu)`
    pub event_mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleStats {
    /// sizes in decreasing order
    pub order_stats: Vec<usize>,
    pub counts: BTreeMap<usize, usize>,
    /// `(sum_{i <= s N_n} K_i - N_n s mu) / (L(n) n^{1/alpha})` at `s = j / grid`
    pub path: Option<Vec<f64>>,
    /// `K_i / n` for the positive sizes
    pub points: Vec<f64>,
    pub event: Option<bool>,
}

pub fn stats(sample: &PartitionSample, req: &StatsRequest) -> SampleStats {
    let mut order_stats = sample.sizes.clone();
    order_stats.sort_unstable_by(|a, b| b.cmp(a));
    let counts = req
        .counts_for
        .iter()
        .map(|&k| (k, sample.sizes.iter().filter(|&&s| s == k).count()))
        .collect();
    let n = sample.n as f64;
    let nn = sample.sizes.len();
    let path = req.path.map(|p| {
        let norm = p.scale_l * n.powf(1.0 / p.alpha);
        let mut prefix = vec![0usize; nn + 1];
        for (i, &k) in sample.sizes.iter().enumerate() {
            prefix[i + 1] = prefix[i] + k;
        }
        (0..=p.grid)
            .map(|j| {
                let s = j as f64 / p.grid as f64;
                let idx = ((s * nn as f64).floor() as usize).min(nn);
                (prefix[idx] as f64 - nn as f64 * s * p.mu) / norm
            })
            .collect()
    });
    SampleStats {
        order_stats,
        counts,
        path,
        points: sample
            .sizes
            .iter()
            .filter(|&&k| k > 0)
            .map(|&k| k as f64 / n)
            .collect(),
        event: req.event_mu.map(|mu| nn as f64 >= n / (2.0 * mu)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::weights::WeightSequence;

    #[test]
    fn identity_gives_one_block() {
        let s = presets::identity_control();
        assert_eq!(sample_rejection(&s, 40, 1).unwrap().sizes, vec![40]);
        assert_eq!(sample_exact(&s, 40, 1).unwrap().sizes, vec![40]);
    }

    #[test]
    fn unit_sizes() {
        let s = SchemeSpec::new(
            presets::power_w(1.0, 2.0, 1.0),
            WeightSequence::explicit(vec![0.0, 1.0]).unwrap(),
        )
        .unwrap();
        let p = sample_exact(&s, 30, 3).unwrap();
        assert_eq!(p.sizes, vec![1; 30]);
    }

    #[test]
    fn bell_three_both_ways() {
        let s = presets::bell();
        let k = Kolchin::new(&s, 3).unwrap();
        let exact = ExactSampler::new(&k, 3).unwrap();
        let rej = RejectionSampler::new(&s, 3).unwrap();
        let reps = 100_000;
        let mut log = Acceptance::default();
        let (mut c_exact, mut c_rej) = ([0usize; 4], [0usize; 4]);
        let mut rng = replicate_rng(11, 0);
        for _ in 0..reps {
            c_exact[exact.draw(&mut rng).n_components()] += 1;
            c_rej[rej.draw(&mut rng, &mut log).unwrap().n_components()] += 1;
        }
        for c in [c_exact, c_rej] {
            let f = c[2] as f64 / reps as f64;
            assert!((f - 0.6).abs() < 0.01, "{f}");
            let f1 = c[1] as f64 / reps as f64;
            let sd = (0.2f64 * 0.8 / reps as f64).sqrt();
            assert!((f1 - 0.2).abs() < 3.0 * sd + 1e-3);
        }
        assert_eq!(log.accepted, reps as u64);
    }

    #[test]
    fn reproducible_and_sums_to_n() {
        let s = presets::scheme_b();
        let k = Kolchin::new(&s, 300).unwrap();
        let ex = ExactSampler::new(&k, 300).unwrap();
        for rep in 0..50 {
            let a = ex.draw(&mut replicate_rng(5, rep));
            let b = ex.draw(&mut replicate_rng(5, rep));
            assert_eq!(a, b);
            assert_eq!(a.sizes.iter().sum::<usize>(), 300);
        }
        assert_ne!(
            ex.draw(&mut replicate_rng(5, 0)),
            ex.draw(&mut replicate_rng(5, 1))
        );
    }

    #[test]
    fn acceptance_rate_tracks_the_stopped_sum() {
        let s = presets::scheme_a();
        let n = 1000;
        let rej = RejectionSampler::new(&s, n).unwrap();
        let mut log = Acceptance::default();
        let mut rng = replicate_rng(2, 0);
        // P(S_N = 1000) is near 1e-6; twenty acceptances pin the rate to about 25%
        for _ in 0..20 {
            rej.draw(&mut rng, &mut log).unwrap();
        }
        let k = Kolchin::new(&s, n).unwrap();
        let ratio = log.rate() / k.stopped[n];
        assert!(ratio > 1.0 / 3.0 && ratio < 3.0, "{ratio}");
    }

    #[test]
    fn attempt_cap_is_reported() {
        let mut rej = RejectionSampler::new(&presets::scheme_a(), 1000).unwrap();
        rej.max_attempts = 10;
        let mut log = Acceptance::default();
        let mut rng = replicate_rng(0, 0);
        // one accepted draw in ten proposals is unlikely at n = 1000
        let mut failed = false;
        for _ in 0..5 {
            if let Err(Error::AttemptCap { attempts, .. }) = rej.draw(&mut rng, &mut log) {
                assert!(attempts >= 10);
                failed = true;
                break;
            }
        }
        assert!(failed);
    }

    #[test]
    fn stats_examples() {
        let s = PartitionSample {
            n: 6,
            sizes: vec![3, 1, 2],
        };
        let req = StatsRequest {
            counts_for: vec![2, 5],
            path: Some(PathSpec {
                mu: 1.5,
                alpha: 2.0,
                scale_l: 0.5,
                grid: 3,
            }),
            event_mu: Some(1.0),
        };
        let st = stats(&s, &req);
        assert_eq!(st.order_stats, vec![3, 2, 1]);
        assert_eq!(st.counts[&2], 1);
        assert_eq!(st.counts[&5], 0);
        let path = st.path.unwrap();
        let end = (6.0 - 3.0 * 1.5) / (0.5 * 6f64.sqrt());
        assert!((path[3] - end).abs() < 1e-15);
        assert_eq!(path[0], 0.0);
        assert_eq!(st.event, Some(true));
        let zeros = PartitionSample {
            n: 4,
            sizes: vec![0, 4, 0],
        };
        assert_eq!(stats(&zeros, &StatsRequest::default()).points, vec![1.0]);
    }

    #[test]
    fn product_draws_sum_to_n() {
        let law = ProductLaw::new(
            presets::product_symmetric()
                .product_factors
                .as_ref()
                .unwrap(),
            200,
        )
        .unwrap();
        let mut rng = replicate_rng(9, 0);
        let mut first_big = 0;
        let reps = 4000;
        for _ in 0..reps {
            let p = sample_product(&law, &mut rng);
            assert_eq!(p.iter().sum::<usize>(), 200);
            if p[0] > p[1] {
                first_big += 1;
            }
        }
        let f = first_big as f64 / reps as f64;
        assert!((f - 0.5).abs() < 4.0 * (0.25 / reps as f64).sqrt());
    }
}
