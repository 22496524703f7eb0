//! Binary Krawtchouk polynomials
//! `K_p^d(x) = sum_j (-1)^j C(x, j) C(d - x, p - j)`,
//! with binomials vanishing outside `0 <= n <= m`.

use crate::crystal::tr_p;
use crate::linalg::ZMatrix;

/// `C(m, n)`, zero when `n < 0` or `n > m` (and when `m < 0`).
pub fn binomial(m: i64, n: i64) -> i64 {
    if n < 0 || m < 0 || n > m {
        return 0;
    }
    let n = n.min(m - n);
    let mut acc: i128 = 1;
    for i in 0..n {
        acc = acc * (m - i) as i128 / (i + 1) as i128;
    }
    i64::try_from(acc).expect("binomial fits in i64")
}

/// `K_p^d(k)` evaluated exactly.
pub fn krawtchouk(d: usize, p: usize, k: usize) -> i64 {
    let (d, p, k) = (d as i64, p as i64, k as i64);
    (0..=p)
        .map(|j| {
            let sign = if j % 2 == 0 { 1 } else { -1 };
            sign * binomial(k, j) * binomial(d - k, p - j)
        })
        .sum()
}

/// All `k` in `0..=d` with `K_p^d(k) = 0`, ascending.
pub fn integer_zeros(d: usize, p: usize) -> Vec<usize> {
    (0..=d).filter(|&k| krawtchouk(d, p, k) == 0).collect()
}

/// `diag(-1 (k times), 1 (d - k times))`
pub fn reflection(d: usize, k: usize) -> ZMatrix {
    let diag: Vec<i64> = (0..d).map(|i| if i < k { -1 } else { 1 }).collect();
    ZMatrix::diagonal(&diag)
}

/// The `p`-form trace of the reflection with `k` eigenvalues `-1`, paired
/// with `K_p^d(k)`; the two always agree.
pub fn reflection_trace_check(d: usize, k: usize, p: usize) -> (i64, i64) {
    (tr_p(&reflection(d, k), p), krawtchouk(d, p, k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_conventions() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(3, -1), 0);
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(40, 20), 137846528820);
    }

    #[test]
    fn values() {
        for d in 0..8 {
            for k in 0..=d {
                assert_eq!(krawtchouk(d, 0, k), 1);
            }
        }
        assert_eq!(krawtchouk(4, 4, 3), -1);
        assert_eq!(krawtchouk(3, 1, 1), 1);
    }

    #[test]
    fn zeros() {
        assert_eq!(integer_zeros(4, 1), vec![2]);
        assert_eq!(integer_zeros(9, 2), vec![3, 6]);
        let z = integer_zeros(6, 3);
        assert!([1, 3, 5].iter().all(|k| z.contains(k)));
    }

    #[test]
    fn reflection_traces() {
        assert_eq!(reflection_trace_check(2, 2, 1), (-2, -2));
        assert_eq!(reflection_trace_check(4, 2, 1), (0, 0));
        assert_eq!(reflection_trace_check(3, 0, 2), (3, 3));
    }

    #[test]
    fn generating_function() {
        // sum_p K_p^d(k) z^p = (1 - z)^k (1 + z)^(d - k), compared at z = 2
        for d in 0..=10usize {
            for k in 0..=d {
                let lhs: i64 = (0..=d).map(|p| krawtchouk(d, p, k) * 2i64.pow(p as u32)).sum();
                let rhs = (-1i64).pow(k as u32) * 3i64.pow((d - k) as u32);
                assert_eq!(lhs, rhs, "d={d} k={k}");
            }
        }
    }
}
