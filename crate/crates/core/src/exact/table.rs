use crate::error::{Error, Result};

/// Entries below this are flushed to zero so the kernel never touches subnormals.
pub const FLUSH: f64 = 1e-250;

/// `P(S_l = m)` for `l <= ell_max`, `m <= n`, where `S_l` sums `l` copies of `X`.
///
/// Row `l` is stored from `m = l * s0` on, `s0` being the smallest size `X` can take.
#[derive(Debug, Clone)]
pub struct ConvolutionTable {
    pub n: usize,
    pub s0: usize,
    rows: Vec<Vec<f64>>,
}

impl ConvolutionTable {
    /// Rows `0..=ell_max`; with `s0 > 0` rows past `n / s0` are empty and dropped.
    pub fn new(law_x: &[f64], ell_max: usize, n: usize) -> Result<Self> {
        let s0 = law_x
            .iter()
            .take(n + 1)
            .position(|&p| p > 0.0)
            .ok_or_else(|| Error::InvalidWeights(format!("X puts no mass on 0..={n}")))?;
        let ell_max = n.checked_div(s0).map_or(ell_max, |l| ell_max.min(l));
        let cells = (0..=ell_max).map(|l| n + 1 - l * s0).sum::<usize>();
        if cells > 400_000_000 {
            return Err(Error::Budget(format!(
                "convolution table needs {cells} cells"
            )));
        }
        let px: Vec<f64> = (0..=n)
            .map(|k| law_x.get(k).copied().unwrap_or(0.0))
            .collect();
        let mut rows = Vec::with_capacity(ell_max + 1);
        let mut first = vec![0.0; n + 1];
        first[0] = 1.0;
        rows.push(first);
        for l in 1..=ell_max {
            let row = next_row(&rows[l - 1], (l - 1) * s0, &px, s0, n);
            rows.push(row);
        }
        Ok(Self { n, s0, rows })
    }

    pub fn ell_max(&self) -> usize {
        self.rows.len() - 1
    }

    fn offset(&self, l: usize) -> usize {
        l * self.s0
    }

    /// `P(S_l = m)`, zero outside the stored range.
    #[inline]
    pub fn get(&self, l: usize, m: usize) -> f64 {
        let Some(row) = self.rows.get(l) else {
            return 0.0;
        };
        let off = self.offset(l);
        if m < off {
            return 0.0;
        }
        row.get(m - off).copied().unwrap_or(0.0)
    }

    /// Row `l` together with the value of `m` at its first entry.
    pub fn row(&self, l: usize) -> (usize, &[f64]) {
        (self.offset(l), &self.rows[l])
    }
}

/// Row `l` from row `l - 1` (stored from `prev_off`): `out[m] = sum_k P(X = k) prev[m - k]`.
fn next_row(prev: &[f64], prev_off: usize, px: &[f64], s0: usize, n: usize) -> Vec<f64> {
    let off = prev_off + s0;
    let len = (n + 1).saturating_sub(off);
    let mut out = vec![0.0; len];
    let prev_max = prev.iter().copied().fold(0.0, f64::max);
    if len == 0 || prev_max == 0.0 {
        return out;
    }
    for (k, &c) in px.iter().enumerate().skip(s0) {
        if k + prev_off > n {
            break;
        }
        if c * prev_max < FLUSH {
            continue;
        }
        let start = k - s0;
        let count = prev.len().min(len - start);
        for (o, &p) in out[start..start + count].iter_mut().zip(&prev[..count]) {
            *o += c * p;
        }
    }
    for o in out.iter_mut() {
        if *o < FLUSH {
            *o = 0.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_one() {
        let t = ConvolutionTable::new(&[0.0, 1.0], 10, 10).unwrap();
        for l in 0..=10 {
            assert_eq!(t.get(l, l), 1.0);
            assert_eq!(t.get(l, l + 1), 0.0);
        }
        assert_eq!(t.ell_max(), 10);
    }

    #[test]
    fn uniform_one_two() {
        let t = ConvolutionTable::new(&[0.0, 0.5, 0.5], 4, 8).unwrap();
        assert_eq!(t.get(2, 3), 0.5);
        assert_eq!(t.get(2, 2), 0.25);
        assert_eq!(t.get(2, 4), 0.25);
        assert_eq!(t.get(0, 0), 1.0);
        assert_eq!(t.get(0, 1), 0.0);
    }

    #[test]
    fn zero_size_allowed() {
        let t = ConvolutionTable::new(&[0.5, 0.5], 3, 3).unwrap();
        assert_eq!(t.get(3, 0), 0.125);
        assert_eq!(t.get(3, 2), 0.375);
    }

    proptest! {
        #[test]
        fn rows_conserve_mass(w in proptest::collection::vec(0.0f64..1.0, 2..6), l in 1usize..6) {
            let total: f64 = w.iter().sum();
            prop_assume!(total > 0.1);
            let mut px = vec![0.0];
            px.extend(w.iter().map(|x| x / total));
            // n large enough that nothing is cut off
            let n = l * px.len();
            let t = ConvolutionTable::new(&px, l, n).unwrap();
            let (_, row) = t.row(l);
            let mass: f64 = row.iter().sum();
            prop_assert!((mass - 1.0).abs() < 1e-12);
        }
    }
}
