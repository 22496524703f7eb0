//! Smith normal form over the integers with both transforms and their inverses.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::matrix::ZMatrix;

/// `m = u * D * v` with `u`, `v` unimodular and `D` the `rows x cols` matrix
/// carrying `diag` on its main diagonal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnfDecomposition {
    pub u: ZMatrix,
    pub u_inv: ZMatrix,
    pub diag: Vec<BigInt>,
    pub v: ZMatrix,
    pub v_inv: ZMatrix,
}

impl SnfDecomposition {
    /// Number of nonzero invariant factors.
    pub fn rank(&self) -> usize {
        self.diag.iter().take_while(|x| !x.is_zero()).count()
    }

    /// The diagonal factor as a full matrix.
    pub fn d_matrix(&self) -> ZMatrix {
        let mut d = ZMatrix::zeros(self.u.cols(), self.v.rows());
        for (i, x) in self.diag.iter().enumerate() {
            d[(i, i)] = x.clone();
        }
        d
    }
}

struct Reducer {
    a: ZMatrix,
    // a = p * m * q at all times; u = p^-1 and v = q^-1 are kept alongside
    p: ZMatrix,
    u: ZMatrix,
    q: ZMatrix,
    v: ZMatrix,
}

impl Reducer {
    fn row_add(&mut self, dst: usize, src: usize, f: &BigInt) {
        self.a.add_row_multiple(dst, src, f);
        self.p.add_row_multiple(dst, src, f);
        self.u.add_col_multiple(src, dst, &-f);
    }

    fn col_add(&mut self, dst: usize, src: usize, f: &BigInt) {
        self.a.add_col_multiple(dst, src, f);
        self.q.add_col_multiple(dst, src, f);
        self.v.add_row_multiple(src, dst, &-f);
    }

    fn row_swap(&mut self, i: usize, j: usize) {
        self.a.swap_rows(i, j);
        self.p.swap_rows(i, j);
        self.u.swap_cols(i, j);
    }

    fn col_swap(&mut self, i: usize, j: usize) {
        self.a.swap_cols(i, j);
        self.q.swap_cols(i, j);
        self.v.swap_rows(i, j);
    }

    fn row_negate(&mut self, i: usize) {
        self.a.negate_row(i);
        self.p.negate_row(i);
        // negating a column of u
        for r in 0..self.u.rows() {
            let x = -&self.u[(r, i)];
            self.u[(r, i)] = x;
        }
    }

    /// Smallest nonzero |entry| in the trailing block, first in row-major order.
    fn smallest_in_block(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, BigInt)> = None;
        for r in t..self.a.rows() {
            for c in t..self.a.cols() {
                let x = self.a[(r, c)].abs();
                if x.is_zero() {
                    continue;
                }
                if best.as_ref().is_none_or(|(_, _, b)| x < *b) {
                    best = Some((r, c, x));
                }
            }
        }
        best.map(|(r, c, _)| (r, c))
    }

    fn reduce_pivot(&mut self, t: usize) {
        let (rows, cols) = (self.a.rows(), self.a.cols());
        loop {
            let piv = self.a[(t, t)].clone();
            for r in t + 1..rows {
                if !self.a[(r, t)].is_zero() {
                    let quot = &self.a[(r, t)] / &piv;
                    if !quot.is_zero() {
                        self.row_add(r, t, &-quot);
                    }
                }
            }
            for c in t + 1..cols {
                if !self.a[(t, c)].is_zero() {
                    let quot = &self.a[(t, c)] / &piv;
                    if !quot.is_zero() {
                        self.col_add(c, t, &-quot);
                    }
                }
            }

            // leftover remainders in the pivot row or column become the new pivot
            let mut best: Option<(bool, usize, BigInt)> = None;
            for r in t + 1..rows {
                let x = self.a[(r, t)].abs();
                if !x.is_zero() && best.as_ref().is_none_or(|(_, _, b)| x < *b) {
                    best = Some((true, r, x));
                }
            }
            for c in t + 1..cols {
                let x = self.a[(t, c)].abs();
                if !x.is_zero() && best.as_ref().is_none_or(|(_, _, b)| x < *b) {
                    best = Some((false, c, x));
                }
            }
            match best {
                Some((true, r, _)) => {
                    self.row_swap(t, r);
                    continue;
                }
                Some((false, c, _)) => {
                    self.col_swap(t, c);
                    continue;
                }
                None => {}
            }

            let piv = self.a[(t, t)].clone();
            let offender = (t + 1..rows)
                .flat_map(|r| (t + 1..cols).map(move |c| (r, c)))
                .find(|&(r, c)| !self.a[(r, c)].is_multiple_of(&piv));
            match offender {
                Some((r, _)) => self.row_add(t, r, &BigInt::from(1)),
                None => break,
            }
        }
        if self.a[(t, t)].is_negative() {
            self.row_negate(t);
        }
    }
}

/// Smith normal form of an integer matrix.
///
/// Pivots are chosen as the smallest nonzero absolute value, scanning rows
/// then columns, so the output is a deterministic function of the input.
/// Invariant factors satisfy `d_1 | d_2 | ...` with zeros last.
pub fn snf(m: &ZMatrix) -> SnfDecomposition {
    let (rows, cols) = (m.rows(), m.cols());
    let mut red = Reducer {
        a: m.clone(),
        p: ZMatrix::identity(rows),
        u: ZMatrix::identity(rows),
        q: ZMatrix::identity(cols),
        v: ZMatrix::identity(cols),
    };
    let steps = rows.min(cols);
    for t in 0..steps {
        let Some((r, c)) = red.smallest_in_block(t) else {
            break;
        };
        red.row_swap(t, r);
        red.col_swap(t, c);
        red.reduce_pivot(t);
    }
    let diag = (0..steps).map(|i| red.a[(i, i)].clone()).collect();
    SnfDecomposition {
        u: red.u,
        u_inv: red.p,
        diag,
        v: red.v,
        v_inv: red.q,
    }
}
