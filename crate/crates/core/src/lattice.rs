//! Lattices given by a rational Gram matrix, and enumeration of dual vectors
//! by squared norm.
//!
//! Coordinates are always taken in a fixed basis of the translation lattice,
//! so the lattice itself is `Z^d` and all metric information lives in the
//! Gram matrix `G`. Dual vectors are integer vectors `v` with squared norm
//! `v^T G^{-1} v`.
//!
//! Enumeration is a Fincke-Pohst descent over the exact decomposition
//! `G* = U^T diag(D) U` (`U` unit upper triangular). The descent prunes with
//! floating-point radii widened by a safety margin, so it can only visit too
//! many candidates; whether a candidate is kept, and in which shell, is
//! decided on the exact integer value of `den * v^T G* v`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::rational::{common_denominator, format_rational, to_f64};
use crate::linalg::{QMatrix, Rational};

/// Scaled integer norm with its coefficient vector.
type Hit = (i128, Vec<i64>);

pub const DEFAULT_ENUM_CAP: u64 = 10_000_000;

/// Exact `A = U^T diag(D) U` with `U` unit upper triangular.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ldl {
    pub u: QMatrix,
    pub d: Vec<Rational>,
}

/// Exact decomposition of a symmetric matrix; fails with the index of the
/// first non-positive pivot.
pub fn ldl(a: &QMatrix) -> Result<Ldl> {
    let n = a.rows();
    let mut u = QMatrix::identity(n);
    let mut d: Vec<Rational> = Vec::with_capacity(n);
    for i in 0..n {
        let mut di = a[(i, i)].clone();
        for k in 0..i {
            di -= &d[k] * &u[(k, i)] * &u[(k, i)];
        }
        if !di.is_positive() {
            return Err(Error::NotPositiveDefinite {
                index: i,
                pivot: format_rational(&di),
            });
        }
        for j in i + 1..n {
            let mut x = a[(i, j)].clone();
            for k in 0..i {
                x -= &d[k] * &u[(k, i)] * &u[(k, j)];
            }
            u[(i, j)] = x / &di;
        }
        d.push(di);
    }
    Ok(Ldl { u, d })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeGram {
    gram: QMatrix,
    dual: QMatrix,
    det: Rational,
}

impl LatticeGram {
    /// Validates symmetry and positive definiteness exactly.
    pub fn new(gram: QMatrix) -> Result<Self> {
        if !gram.is_square() || gram.rows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "Gram matrix must be square and nonempty, got {}x{}",
                gram.rows(),
                gram.cols()
            )));
        }
        if !gram.is_symmetric() {
            return Err(Error::NotSymmetric);
        }
        let dec = ldl(&gram)?;
        let det = dec.d.iter().product();
        let dual = gram.inverse()?;
        Ok(LatticeGram { gram, dual, det })
    }

    /// `Z^d` with the standard inner product.
    pub fn standard(d: usize) -> Self {
        LatticeGram::new(QMatrix::identity(d)).expect("identity Gram")
    }

    pub fn dim(&self) -> usize {
        self.gram.rows()
    }

    pub fn gram(&self) -> &QMatrix {
        &self.gram
    }

    /// `G* = G^{-1}`, the Gram matrix of the dual basis.
    pub fn dual_gram(&self) -> &QMatrix {
        &self.dual
    }

    pub fn det_gram(&self) -> &Rational {
        &self.det
    }

    /// `sqrt(det G)`, the volume of a fundamental domain.
    pub fn covolume(&self) -> f64 {
        to_f64(&self.det).sqrt()
    }

    /// Squared dual norm `v^T G* v`.
    pub fn dual_norm2(&self, v: &[i64]) -> Rational {
        self.dual.quadratic_form(v)
    }

    /// Upper bound on the number of dual vectors with norm at most `r`.
    ///
    /// Unit cells centred on the counted points are disjoint and stay inside
    /// the ball of radius `r + delta/2`, where `delta` bounds the diameter of
    /// a cell by the sum of the basis vector lengths.
    pub fn count_upper_bound(&self, r: f64) -> f64 {
        let d = self.dim();
        let delta: f64 = (0..d).map(|i| to_f64(&self.dual[(i, i)]).sqrt()).sum();
        let dual_covolume = 1.0 / self.covolume();
        ball_volume(d) * (r.max(0.0) + delta / 2.0).powi(d as i32) / dual_covolume
    }

    /// Heuristic count `V_d r^d / covol(dual)`, used to refuse oversized
    /// enumerations before starting them.
    pub fn count_estimate(&self, r: f64) -> f64 {
        let d = self.dim();
        ball_volume(d) * r.max(0.0).powi(d as i32) * self.covolume()
    }
}

/// Volume of the Euclidean unit ball in dimension `d`.
pub fn ball_volume(d: usize) -> f64 {
    // V_0 = 1, V_1 = 2, V_d = 2 pi / d * V_{d-2}
    let mut v = if d.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut k = if d.is_multiple_of(2) { 2 } else { 3 };
    while k <= d {
        v *= 2.0 * PI / k as f64;
        k += 2;
    }
    v
}

pub fn dual_gram(l: &LatticeGram) -> QMatrix {
    l.dual_gram().clone()
}

pub fn covolume(l: &LatticeGram) -> f64 {
    l.covolume()
}

/// Dual vectors up to a norm bound, grouped by exact squared norm.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualShellTable {
    bound: Rational,
    shells: BTreeMap<Rational, Vec<Vec<i64>>>,
}

#[derive(Serialize)]
struct ShellCount {
    mu2: String,
    count: usize,
}

impl DualShellTable {
    pub fn bound(&self) -> &Rational {
        &self.bound
    }

    pub fn shells(&self) -> &BTreeMap<Rational, Vec<Vec<i64>>> {
        &self.shells
    }

    pub fn get(&self, mu2: &Rational) -> Option<&[Vec<i64>]> {
        self.shells.get(mu2).map(Vec::as_slice)
    }

    pub fn keys(&self) -> impl Iterator<Item = &Rational> {
        self.shells.keys()
    }

    pub fn vector_count(&self) -> usize {
        self.shells.values().map(Vec::len).sum()
    }

    /// The sub-table of shells with `mu2 <= bound`.
    pub fn restrict(&self, bound: &Rational) -> DualShellTable {
        assert!(bound <= &self.bound, "cannot restrict to a larger bound");
        DualShellTable {
            bound: bound.clone(),
            shells: self
                .shells
                .range(..=bound.clone())
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    /// `[{"mu2": "p/q", "count": n}, ...]`
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<ShellCount> = self
            .shells
            .iter()
            .map(|(k, v)| ShellCount {
                mu2: format_rational(k),
                count: v.len(),
            })
            .collect();
        serde_json::to_value(rows).expect("shell counts serialize")
    }
}

struct Descent {
    d: usize,
    // float copies of the exact decomposition, for pruning only
    diag: Vec<f64>,
    upper: Vec<Vec<f64>>,
    // den * G*, integral
    scaled: Vec<Vec<i128>>,
    limit: i128,
    cap: u64,
}

const PRUNE_SLACK: f64 = 1e-7;

impl Descent {
    fn exact_value(&self, v: &[i64]) -> i128 {
        let mut acc = 0i128;
        for i in 0..self.d {
            if v[i] == 0 {
                continue;
            }
            let mut row = 0i128;
            for j in 0..self.d {
                row += self.scaled[i][j] * v[j] as i128;
            }
            acc += row * v[i] as i128;
        }
        acc
    }

    /// Integer range for coordinate `i` given coordinates above it.
    fn range(&self, i: usize, v: &[i64], remaining: f64) -> (i64, i64, f64) {
        let center: f64 = -(i + 1..self.d)
            .map(|j| self.upper[i][j] * v[j] as f64)
            .sum::<f64>();
        let radius = (remaining.max(0.0) / self.diag[i]).sqrt() + PRUNE_SLACK;
        ((center - radius).ceil() as i64, (center + radius).floor() as i64, center)
    }

    fn descend(
        &self,
        i: usize,
        v: &mut [i64],
        remaining: f64,
        out: &mut Vec<(i128, Vec<i64>)>,
        visited: &AtomicU64,
    ) -> Result<()> {
        let (lo, hi, center) = self.range(i, v, remaining);
        for x in lo..=hi {
            v[i] = x;
            let step = self.diag[i] * (x as f64 - center).powi(2);
            let rest = remaining - step;
            if i == 0 {
                let q = self.exact_value(v);
                if q <= self.limit {
                    let n = visited.fetch_add(1, Ordering::Relaxed) + 1;
                    if n > self.cap {
                        return Err(Error::BudgetExceeded { count: n, cap: self.cap });
                    }
                    out.push((q, v.to_vec()));
                }
            } else if rest > -PRUNE_SLACK * (1.0 + remaining.abs()) {
                self.descend(i - 1, v, rest, out, visited)?;
            }
        }
        v[i] = 0;
        Ok(())
    }
}

/// All dual vectors with `v^T G* v <= bound`, grouped into shells.
///
/// Shell contents are sorted lexicographically; the result does not depend
/// on how the work was split across threads.
pub fn enumerate_shells(l: &LatticeGram, bound: &Rational, cap: u64) -> Result<DualShellTable> {
    if bound.is_negative() {
        return Err(Error::DimensionMismatch("negative norm bound".into()));
    }
    let d = l.dim();
    let estimate = l.count_estimate(to_f64(bound).sqrt());
    if estimate > cap as f64 {
        return Err(Error::BudgetExceeded {
            count: estimate as u64,
            cap,
        });
    }
    let dual = l.dual_gram();
    let den = common_denominator((0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| &dual[(i, j)]));
    let to_i128 = |x: BigInt| {
        x.to_i128()
            .ok_or_else(|| Error::DimensionMismatch("dual Gram entries too large".into()))
    };
    let mut scaled = vec![vec![0i128; d]; d];
    for (i, row) in scaled.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            let q = &dual[(i, j)] * Rational::from_integer(den.clone());
            *x = to_i128(q.to_integer())?;
        }
    }
    let limit = to_i128((bound * Rational::from_integer(den.clone())).floor().to_integer())?;
    let dec = ldl(dual).expect("inverse of a positive definite matrix");
    let descent = Descent {
        d,
        diag: dec.d.iter().map(to_f64).collect(),
        upper: (0..d)
            .map(|i| (0..d).map(|j| to_f64(&dec.u[(i, j)])).collect())
            .collect(),
        scaled,
        limit,
        cap,
    };

    let total = to_f64(bound) * (1.0 + 1e-12) + PRUNE_SLACK;
    let visited = AtomicU64::new(0);
    let top = d - 1;
    let (lo, hi, center) = descent.range(top, &vec![0; d], total);
    let chunks: Vec<Result<Vec<Hit>>> = (lo..=hi)
        .into_par_iter()
        .map(|x| {
            let mut v = vec![0i64; d];
            v[top] = x;
            let mut out = Vec::new();
            let rest = total - descent.diag[top] * (x as f64 - center).powi(2);
            if top == 0 {
                let q = descent.exact_value(&v);
                if q <= descent.limit {
                    let n = visited.fetch_add(1, Ordering::Relaxed) + 1;
                    if n > cap {
                        return Err(Error::BudgetExceeded { count: n, cap });
                    }
                    out.push((q, v));
                }
            } else if rest > -PRUNE_SLACK * (1.0 + total) {
                descent.descend(top - 1, &mut v, rest, &mut out, &visited)?;
            }
            Ok(out)
        })
        .collect();

    let mut grouped: BTreeMap<i128, Vec<Vec<i64>>> = BTreeMap::new();
    for chunk in chunks {
        for (q, v) in chunk? {
            grouped.entry(q).or_default().push(v);
        }
    }
    let denom = Rational::from_integer(den);
    let shells = grouped
        .into_iter()
        .map(|(q, mut vs)| {
            vs.sort_unstable();
            (Rational::from_integer(BigInt::from(q)) / &denom, vs)
        })
        .collect();
    Ok(DualShellTable {
        bound: bound.clone(),
        shells,
    })
}
