//! Deterministic parallel summation over a lexicographic index range.
//!
//! The range `0..total` is cut into leaves of a fixed size that depends only
//! on `total`; each leaf is summed sequentially with Neumaier compensation
//! and the leaf results are combined by a fixed-shape pairwise tree. The
//! result therefore does not depend on how many threads evaluated the leaves.

use num_complex::Complex64;
use rayon::prelude::*;

/// Upper bound on terms per leaf.
pub const LEAF_SIZE: u64 = 4096;

/// Neumaier-compensated complex accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: Complex64,
    carry: Complex64,
}

fn two_sum(acc: &mut f64, carry: &mut f64, x: f64) {
    let t = *acc + x;
    if acc.abs() >= x.abs() {
        *carry += (*acc - t) + x;
    } else {
        *carry += (x - t) + *acc;
    }
    *acc = t;
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: Complex64) {
        two_sum(&mut self.sum.re, &mut self.carry.re, x.re);
        two_sum(&mut self.sum.im, &mut self.carry.im, x.im);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.carry
    }
}

/// Leaf size for a range of `total` terms: the largest power of `base`
/// not exceeding [`LEAF_SIZE`] (and not exceeding `total`).
pub fn leaf_size(total: u64, base: u64) -> u64 {
    let base = base.max(2);
    let mut size = 1u64;
    while size * base <= LEAF_SIZE && size * base <= total {
        size *= base;
    }
    size
}

fn pairwise(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => values[0],
        len => {
            let mid = len / 2;
            pairwise(&values[..mid]) + pairwise(&values[mid..])
        }
    }
}

/// Sums `term(i)` for `i` in `0..total`. Leaves are aligned to powers of
/// `base`, so each leaf is one word prefix when indices are words over an
/// alphabet of that size.
pub fn deterministic_sum<F>(total: u64, base: u64, workers: usize, term: F) -> Complex64
where
    F: Fn(u64) -> Complex64 + Sync,
{
    if total == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let leaf = leaf_size(total, base);
    let leaves = total.div_ceil(leaf);
    let leaf_sum = |k: u64| {
        let mut acc = CompensatedSum::default();
        let end = ((k + 1) * leaf).min(total);
        for i in k * leaf..end {
            acc.add(term(i));
        }
        acc.value()
    };
    let partials: Vec<Complex64> = if workers <= 1 {
        (0..leaves).map(leaf_sum).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().expect("thread pool");
        pool.install(|| (0..leaves).into_par_iter().map(leaf_sum).collect())
    };
    pairwise(&partials)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leaf_sizes() {
        assert_eq!(leaf_size(4u64.pow(10), 4), 4096);
        assert_eq!(leaf_size(8u64.pow(5), 8), 4096);
        assert_eq!(leaf_size(9u64.pow(5), 9), 729);
        assert_eq!(leaf_size(16, 4), 16);
        assert_eq!(leaf_size(1, 4), 1);
    }

    #[test]
    fn empty_and_small() {
        assert_eq!(deterministic_sum(0, 4, 1, |_| Complex64::new(1.0, 0.0)), Complex64::new(0.0, 0.0));
        let s = deterministic_sum(10, 4, 1, |i| Complex64::new(i as f64, -1.0));
        assert_eq!(s, Complex64::new(45.0, -10.0));
    }

    #[test]
    fn compensation_recovers_small_terms() {
        let n = 1u64 << 20;
        let s = deterministic_sum(n, 4, 1, |i| Complex64::new(if i == 0 { 1e16 } else { 1.0 }, 0.0));
        assert_eq!(s.re, 1e16 + (n - 1) as f64);
    }

    #[test]
    fn bit_identical_across_workers() {
        let term = |i: u64| Complex64::new(((i as f64) * 0.37).sin(), ((i as f64) * 1e-3).cos() * 1e-7);
        let one = deterministic_sum(1 << 18, 4, 1, term);
        for workers in [2, 3, 8] {
            let many = deterministic_sum(1 << 18, 4, workers, term);
            assert_eq!(one.re.to_bits(), many.re.to_bits());
            assert_eq!(one.im.to_bits(), many.im.to_bits());
        }
    }
}
