use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numeric::special::ln_factorial;
use crate::weights::SchemeSpec;

use super::law::DiscreteLaw;

/// Laws obtained by enumerating every set partition of `[n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceLaws {
    /// `n! u_n`, the total weight
    pub total_weight: f64,
    pub law_nn: DiscreteLaw,
    /// sizes in decreasing order
    pub multiset: BTreeMap<Vec<usize>, f64>,
}

/// Each partition `P` of `[n]` gets weight `|P|! v_{|P|} prod_{Q in P} |Q|! w_{|Q|}`.
pub fn brute_force_partition_law(scheme: &SchemeSpec, n: usize) -> Result<BruteForceLaws> {
    if n == 0 || n > 9 {
        return Err(Error::Budget(format!(
            "set partitions are enumerated for 1 <= n <= 9, got {n}"
        )));
    }
    if scheme.w.term(0) != 0.0 {
        return Err(Error::NonzeroConstantTerm(scheme.w.term(0)));
    }
    let fact = |k: usize| ln_factorial(k as u64).exp();
    let mut by_blocks = vec![0.0; n + 1];
    let mut multiset: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    // restricted growth strings: a[i] <= 1 + max(a[..i])
    let mut a = vec![0usize; n];
    loop {
        let blocks = a.iter().max().map_or(0, |m| m + 1);
        let mut sizes = vec![0usize; blocks];
        for &b in &a {
            sizes[b] += 1;
        }
        let mut weight = fact(blocks) * scheme.v.term(blocks);
        for &s in &sizes {
            weight *= fact(s) * scheme.w.term(s);
        }
        by_blocks[blocks] += weight;
        sizes.sort_unstable_by(|x, y| y.cmp(x));
        *multiset.entry(sizes).or_insert(0.0) += weight;
        if !advance(&mut a) {
            break;
        }
    }
    let total: f64 = by_blocks.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroPartitionFunction(n));
    }
    multiset.retain(|_, w| *w > 0.0);
    for w in multiset.values_mut() {
        *w /= total;
    }
    Ok(BruteForceLaws {
        total_weight: total,
        law_nn: DiscreteLaw::new(by_blocks.iter().map(|w| w / total).collect()),
        multiset,
    })
}

fn advance(a: &mut [usize]) -> bool {
    let n = a.len();
    for i in (1..n).rev() {
        let max_prefix = a[..i].iter().copied().max().unwrap_or(0);
        if a[i] <= max_prefix {
            a[i] += 1;
            for x in a[i + 1..].iter_mut() {
                *x = 0;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_bell_many_partitions() {
        // with v = w = 1/i! every partition has weight one
        let s = crate::presets::bell();
        let bell = [
            1.0, 1.0, 2.0, 5.0, 15.0, 52.0, 203.0, 877.0, 4140.0, 21147.0,
        ];
        for (n, &count) in bell.iter().enumerate().skip(1) {
            let b = brute_force_partition_law(&s, n).unwrap();
            assert!((b.total_weight - count).abs() < 1e-9 * count, "n={n}");
        }
        assert!(brute_force_partition_law(&s, 10).is_err());
    }

    #[test]
    fn stirling_law_at_four() {
        let b = brute_force_partition_law(&crate::presets::bell(), 4).unwrap();
        let expect = [0.0, 1.0, 7.0, 6.0, 1.0];
        for (l, e) in expect.iter().enumerate() {
            assert!((b.law_nn.prob(l) - e / 15.0).abs() < 1e-15);
        }
        let total: f64 = b.multiset.values().sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert!((b.multiset[&vec![2, 1, 1]] - 6.0 / 15.0).abs() < 1e-15);
    }
}
