//! Integer polynomials: characteristic polynomials and cyclotomic factors.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::matrix::ZMatrix;

/// Dense integer polynomial, coefficients from the constant term upward.
/// The zero polynomial has no coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        IntPoly { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        IntPoly::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn one() -> Self {
        IntPoly::from_i64(&[1])
    }

    /// `x - c`
    pub fn linear(c: i64) -> Self {
        IntPoly::from_i64(&[-c, 1])
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// Coefficient of `x^i`, zero past the degree.
    pub fn coeff(&self, i: usize) -> BigInt {
        self.coeffs.get(i).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last().is_some_and(|c| c.is_one())
    }

    pub fn eval(&self, x: &BigInt) -> BigInt {
        self.coeffs
            .iter()
            .rev()
            .fold(BigInt::zero(), |acc, c| acc * x + c)
    }

    /// Evaluates at a square matrix by Horner's rule.
    pub fn eval_matrix(&self, m: &ZMatrix) -> ZMatrix {
        let n = m.rows();
        let mut acc = ZMatrix::zeros(n, n);
        for c in self.coeffs.iter().rev() {
            acc = &acc * m;
            for i in 0..n {
                acc[(i, i)] += c;
            }
        }
        acc
    }

    pub fn mul(&self, other: &IntPoly) -> IntPoly {
        if self.is_zero() || other.is_zero() {
            return IntPoly::new(Vec::new());
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPoly::new(out)
    }

    /// Quotient and remainder by a monic divisor; both are integral.
    pub fn div_rem_monic(&self, divisor: &IntPoly) -> (IntPoly, IntPoly) {
        assert!(divisor.is_monic(), "divisor must be monic");
        let dd = divisor.degree();
        if self.is_zero() || self.degree() < dd {
            return (IntPoly::new(Vec::new()), self.clone());
        }
        let mut rem = self.coeffs.clone();
        let mut quot = vec![BigInt::zero(); self.degree() - dd + 1];
        for i in (0..quot.len()).rev() {
            let c = rem[i + dd].clone();
            if c.is_zero() {
                continue;
            }
            for (j, dc) in divisor.coeffs.iter().enumerate() {
                rem[i + j] -= &c * dc;
            }
            quot[i] = c;
        }
        rem.truncate(dd);
        (IntPoly::new(quot), IntPoly::new(rem))
    }

    /// Exact quotient if `divisor` divides `self`.
    pub fn exact_div(&self, divisor: &IntPoly) -> Option<IntPoly> {
        let (q, r) = self.div_rem_monic(divisor);
        r.is_zero().then_some(q)
    }

    /// Divides out `divisor` as often as possible, returning the multiplicity
    /// and the cofactor.
    pub fn strip_factor(&self, divisor: &IntPoly) -> (usize, IntPoly) {
        let mut rest = self.clone();
        let mut count = 0;
        while rest.degree() >= divisor.degree() && !rest.is_zero() {
            match rest.exact_div(divisor) {
                Some(q) => {
                    rest = q;
                    count += 1;
                }
                None => break,
            }
        }
        (count, rest)
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.abs();
            let show_coeff = !a.is_one() || i == 0;
            if show_coeff {
                write!(f, "{a}")?;
            }
            match i {
                0 => {}
                1 => write!(f, "x")?,
                _ => write!(f, "x^{i}")?,
            }
        }
        Ok(())
    }
}

/// `det(xI - g)` by the Faddeev-LeVerrier recursion. Each step divides by
/// the step index; the division is exact over the integers.
pub fn char_poly(g: &ZMatrix) -> IntPoly {
    assert!(g.is_square(), "characteristic polynomial of a non-square matrix");
    let n = g.rows();
    let mut c = vec![BigInt::zero(); n + 1];
    c[n] = BigInt::one();
    let mut m = ZMatrix::zeros(n, n);
    for k in 1..=n {
        let mut next = g * &m;
        for i in 0..n {
            next[(i, i)] += &c[n - k + 1];
        }
        m = next;
        let am = g * &m;
        let trace: BigInt = (0..n).map(|i| am[(i, i)].clone()).sum();
        c[n - k] = -trace / BigInt::from(k);
    }
    IntPoly::new(c)
}

/// The `n`-th cyclotomic polynomial.
pub fn cyclotomic(n: usize) -> IntPoly {
    assert!(n >= 1);
    let mut xn = vec![BigInt::zero(); n + 1];
    xn[0] = -BigInt::one();
    xn[n] = BigInt::one();
    let mut p = IntPoly::new(xn);
    for d in 1..n {
        if n.is_multiple_of(d) {
            p = p.exact_div(&cyclotomic(d)).expect("cyclotomic divisor");
        }
    }
    p
}

/// Euler's totient.
pub fn totient(n: usize) -> usize {
    let mut result = n;
    let mut m = n;
    let mut p = 2;
    while p * p <= m {
        if m.is_multiple_of(p) {
            while m.is_multiple_of(p) {
                m /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if m > 1 {
        result -= result / m;
    }
    result
}

/// Writes a polynomial as a product of cyclotomic polynomials, returned as a
/// list of indices with repetition in ascending order, or `None` when some
/// factor is not cyclotomic.
pub fn cyclotomic_factorization(p: &IntPoly) -> Option<Vec<usize>> {
    let mut rest = p.clone();
    let mut out = Vec::new();
    let mut n = 1;
    while rest.degree() > 0 {
        let phi = totient(n);
        if phi > rest.degree() {
            // totient(n) >= sqrt(n/2), so no larger index can fit either
            if n > 2 * rest.degree() * rest.degree() + 2 {
                return None;
            }
            n += 1;
            continue;
        }
        let (mult, cof) = rest.strip_factor(&cyclotomic(n));
        out.extend(std::iter::repeat_n(n, mult));
        rest = cof;
        n += 1;
    }
    (rest.coeffs() == [BigInt::one()]).then_some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[Vec<i64>]) -> ZMatrix {
        ZMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn char_poly_examples() {
        assert_eq!(char_poly(&ZMatrix::identity(2)), IntPoly::from_i64(&[1, -2, 1]));
        let rot90 = m(&[vec![0, -1], vec![1, 0]]);
        assert_eq!(char_poly(&rot90), IntPoly::from_i64(&[1, 0, 1]));
        assert_eq!(
            char_poly(&ZMatrix::diagonal(&[-1, -1, 1])),
            IntPoly::from_i64(&[-1, -1, 1, 1])
        );
        assert_eq!(char_poly(&rot90).to_string(), "x^2 + 1");
    }

    #[test]
    fn cyclotomics() {
        assert_eq!(cyclotomic(1), IntPoly::from_i64(&[-1, 1]));
        assert_eq!(cyclotomic(2), IntPoly::from_i64(&[1, 1]));
        assert_eq!(cyclotomic(3), IntPoly::from_i64(&[1, 1, 1]));
        assert_eq!(cyclotomic(4), IntPoly::from_i64(&[1, 0, 1]));
        assert_eq!(cyclotomic(6), IntPoly::from_i64(&[1, -1, 1]));
        assert_eq!(cyclotomic(12), IntPoly::from_i64(&[1, 0, -1, 0, 1]));
        for n in 1..40 {
            assert_eq!(cyclotomic(n).degree(), totient(n), "n = {n}");
        }
    }

    #[test]
    fn factorization() {
        let p = cyclotomic(1).mul(&cyclotomic(1)).mul(&cyclotomic(4)).mul(&cyclotomic(2));
        assert_eq!(cyclotomic_factorization(&p), Some(vec![1, 1, 2, 4]));
        // x^2 - 3 has no roots of unity
        assert_eq!(cyclotomic_factorization(&IntPoly::from_i64(&[-3, 0, 1])), None);
        // x^2 - 3x + 1: eigenvalues of an infinite-order unimodular matrix
        assert_eq!(cyclotomic_factorization(&IntPoly::from_i64(&[1, -3, 1])), None);
    }

    #[test]
    fn division() {
        let p = IntPoly::from_i64(&[-1, -1, 1, 1]);
        let (q, r) = p.div_rem_monic(&IntPoly::linear(1));
        assert!(r.is_zero());
        assert_eq!(q, IntPoly::from_i64(&[1, 2, 1]));
        assert_eq!(q.eval(&BigInt::from(1)), BigInt::from(4));
        assert_eq!(p.strip_factor(&IntPoly::linear(-1)).0, 2);
    }

    proptest! {
        #[test]
        fn cayley_hamilton(n in 1usize..5, entries in prop::collection::vec(-4i64..5, 16)) {
            let rows: Vec<Vec<i64>> = (0..n).map(|i| entries[i * n..(i + 1) * n].to_vec()).collect();
            let g = m(&rows);
            let cp = char_poly(&g);
            prop_assert!(cp.is_monic());
            prop_assert_eq!(cp.degree(), n);
            prop_assert_eq!(cp.eval_matrix(&g), ZMatrix::zeros(n, n));
            // constant term is (-1)^n det
            let det = g.determinant().unwrap();
            let sign = if n % 2 == 0 { BigInt::one() } else { -BigInt::one() };
            prop_assert_eq!(cp.coeff(0), sign * det);
        }
    }
}
