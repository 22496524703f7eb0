//! Fixed-point sets and singular strata.
//!
//! Everything is computed on the torus `R^d / Z^d` and then pushed down by
//! the holonomy action. The fixed set of a collection of elements solves the
//! stacked congruence `(I - g) x = a (mod 1)` through one Smith normal form;
//! each solution component is a subtorus `x0 + span(K)` with `K` a saturated
//! integer basis.
//!
//! Strata are assembled from the family of subtori closed under "fix one
//! more element": starting from the components of each `Fix(gamma)`, a
//! subtorus `S` with pointwise stabiliser `H(S)` is cut by the components of
//! `Fix(H(S) + delta)` lying inside it. Points of `S` off these cuts have
//! isotropy exactly `H(S)`. One-dimensional subtori are split into arcs at
//! their cut points; higher-dimensional ones are reported whole.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use crate::crystal::{eigenvalue_type, AffineElement, CrystalGroup, EigenvalueType};
use crate::linalg::rational::{frac, is_integer, to_f64};
use crate::linalg::{snf, QMatrix, Rational, ZMatrix};

/// One connected component of the fixed set of a single element.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedComponent {
    pub element: AffineElement,
    pub base_point: Vec<Rational>,
    pub kernel_basis: Vec<Vec<i64>>,
    pub dim: usize,
    pub volume2: Rational,
}

impl FixedComponent {
    pub fn volume(&self) -> f64 {
        to_f64(&self.volume2).sqrt()
    }
}

fn q(n: &BigInt) -> Rational {
    Rational::from_integer(n.clone())
}

fn as_i64(n: &BigInt) -> i64 {
    n.to_i64().expect("lattice coordinates fit in i64")
}

/// Components of the common fixed set of `elems` on the torus, as
/// (saturated kernel basis, base point).
fn solve_fixed(d: usize, elems: &[&AffineElement]) -> Vec<(Vec<Vec<i64>>, Vec<Rational>)> {
    let m = d * elems.len();
    if m == 0 {
        let basis = (0..d)
            .map(|i| (0..d).map(|j| i64::from(i == j)).collect())
            .collect();
        return vec![(basis, vec![Rational::zero(); d])];
    }
    let mut b = ZMatrix::zeros(m, d);
    let mut c = Vec::with_capacity(m);
    for (e_idx, e) in elems.iter().enumerate() {
        for i in 0..d {
            for j in 0..d {
                let id = if i == j { BigInt::one() } else { BigInt::zero() };
                b[(e_idx * d + i, j)] = id - &e.g[(i, j)];
            }
            c.push(e.a[i].clone());
        }
    }
    let s = snf(&b);
    let rank = s.rank();
    let rhs: Vec<Rational> = (0..m)
        .map(|i| (0..m).map(|k| q(&s.u_inv[(i, k)]) * &c[k]).sum())
        .collect();
    if rhs[rank..].iter().any(|x| !is_integer(x)) {
        return Vec::new();
    }
    let kernel: Vec<Vec<i64>> = (rank..d)
        .map(|j| (0..d).map(|i| as_i64(&s.v_inv[(i, j)])).collect())
        .collect();
    let factors: Vec<i64> = s.diag[..rank].iter().map(as_i64).collect();
    let mut out = Vec::new();
    let mut choice = vec![0i64; rank];
    loop {
        let mut y = vec![Rational::zero(); d];
        for i in 0..rank {
            y[i] = (&rhs[i] + Rational::from_integer(choice[i].into())) / Rational::from_integer(factors[i].into());
        }
        let x: Vec<Rational> = (0..d)
            .map(|i| frac(&(0..d).map(|j| q(&s.v_inv[(i, j)]) * &y[j]).sum::<Rational>()))
            .collect();
        out.push((kernel.clone(), x));
        let mut i = 0;
        while i < rank && choice[i] + 1 == factors[i] {
            choice[i] = 0;
            i += 1;
        }
        if i == rank {
            break;
        }
        choice[i] += 1;
    }
    out
}

/// `det(K^T G K)` for the columns `K`; 1 for the empty basis.
pub fn volume2(gram: &QMatrix, basis: &[Vec<i64>]) -> Rational {
    let n = basis.len();
    if n == 0 {
        return Rational::one();
    }
    let mut m = QMatrix::zeros(n, n);
    let d = gram.rows();
    for a in 0..n {
        for b in 0..n {
            let mut s = Rational::zero();
            for i in 0..d {
                for j in 0..d {
                    if basis[a][i] != 0 && basis[b][j] != 0 {
                        s += &gram[(i, j)] * Rational::from_integer((basis[a][i] * basis[b][j]).into());
                    }
                }
            }
            m[(a, b)] = s;
        }
    }
    m.determinant().expect("square Gram of a basis")
}

/// Connected components of `Fix(element)` on the torus; empty when the
/// element acts freely.
pub fn fixed_set(group: &CrystalGroup, element: &AffineElement) -> Vec<FixedComponent> {
    let d = group.dim();
    solve_fixed(d, &[element])
        .into_iter()
        .map(|(kernel, base)| FixedComponent {
            element: element.clone(),
            volume2: volume2(group.lattice().gram(), &kernel),
            dim: kernel.len(),
            kernel_basis: kernel,
            base_point: base,
        })
        .collect()
}

/// A rational subspace with a canonical saturated basis and an integral
/// projection `pi` whose kernel is the subspace and which maps `Z^d` onto
/// `Z^{d-n}`. A point `w` lies in `span + Z^d` iff `pi w` is integral.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Subspace {
    rref: Vec<Vec<Rational>>,
    basis: Vec<Vec<i64>>,
    proj: Vec<Vec<i64>>,
    lift: Vec<Vec<i64>>,
}

fn rref(rows: &[Vec<Rational>], d: usize) -> Vec<Vec<Rational>> {
    let mut m: Vec<Vec<Rational>> = rows.to_vec();
    let mut r = 0;
    for c in 0..d {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..d {
                    let delta = &f * &m[r][j];
                    m[i][j] -= delta;
                }
            }
        }
        r += 1;
    }
    m.truncate(r);
    m
}

impl Subspace {
    fn spanned_by(d: usize, vectors: &[Vec<i64>]) -> Subspace {
        let rows: Vec<Vec<Rational>> = vectors
            .iter()
            .map(|v| v.iter().map(|&x| Rational::from_integer(x.into())).collect())
            .collect();
        let rref = rref(&rows, d);
        let n = rref.len();
        // integral rows of the canonical basis, then saturate through the SNF
        let mut b = ZMatrix::zeros(d, n);
        for (j, row) in rref.iter().enumerate() {
            let den = crate::linalg::rational::common_denominator(row);
            for i in 0..d {
                b[(i, j)] = (&row[i] * q(&den)).to_integer();
            }
        }
        let s = snf(&b);
        let basis = (0..n)
            .map(|j| (0..d).map(|i| as_i64(&s.u[(i, j)])).collect())
            .collect();
        let proj = (n..d)
            .map(|i| (0..d).map(|j| as_i64(&s.u_inv[(i, j)])).collect())
            .collect();
        let lift = (n..d)
            .map(|j| (0..d).map(|i| as_i64(&s.u[(i, j)])).collect())
            .collect();
        Subspace {
            rref,
            basis,
            proj,
            lift,
        }
    }

    fn dim(&self) -> usize {
        self.basis.len()
    }

    fn project(&self, w: &[Rational]) -> Vec<Rational> {
        self.proj
            .iter()
            .map(|row| {
                row.iter()
                    .zip(w)
                    .filter(|(a, _)| **a != 0)
                    .map(|(a, x)| x * Rational::from_integer((*a).into()))
                    .sum()
            })
            .collect()
    }

    fn contains_direction(&self, v: &[i64]) -> bool {
        self.proj
            .iter()
            .all(|row| row.iter().zip(v).map(|(a, b)| a * b).sum::<i64>() == 0)
    }
}

/// `x0 + span mod Z^d`, stored with a canonical base point.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Subtorus {
    space: Subspace,
    // pi(x0) mod 1: with the subspace, a complete invariant
    offset: Vec<Rational>,
    base: Vec<Rational>,
}

impl Subtorus {
    fn new(d: usize, directions: &[Vec<i64>], point: &[Rational]) -> Subtorus {
        let space = Subspace::spanned_by(d, directions);
        let offset: Vec<Rational> = space.project(point).iter().map(frac).collect();
        let base = (0..d)
            .map(|i| {
                frac(
                    &space
                        .lift
                        .iter()
                        .zip(&offset)
                        .map(|(col, t)| t * Rational::from_integer(col[i].into()))
                        .sum::<Rational>(),
                )
            })
            .collect();
        Subtorus {
            space,
            offset,
            base,
        }
    }

    fn key(&self) -> (&Vec<Vec<Rational>>, &Vec<Rational>) {
        (&self.space.rref, &self.offset)
    }

    fn dim(&self) -> usize {
        self.space.dim()
    }

    fn contains_point(&self, p: &[Rational]) -> bool {
        self.space
            .project(p)
            .iter()
            .zip(&self.offset)
            .all(|(x, y)| is_integer(&(x - y)))
    }

    fn contains(&self, other: &Subtorus) -> bool {
        other.space.basis.iter().all(|k| self.space.contains_direction(k))
            && self.contains_point(&other.base)
    }

    fn fixed_pointwise_by(&self, e: &AffineElement) -> bool {
        let moved = e.apply(&self.base);
        moved.iter().zip(&self.base).all(|(x, y)| is_integer(&(x - y)))
            && self.space.basis.iter().all(|k| {
                let gk = e.g.apply_int(&k.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>());
                gk.iter().zip(k).all(|(a, &b)| *a == BigInt::from(b))
            })
    }

    fn image(&self, e: &AffineElement) -> Subtorus {
        let d = self.base.len();
        let dirs: Vec<Vec<i64>> = self
            .space
            .basis
            .iter()
            .map(|k| {
                e.g.apply_int(&k.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>())
                    .iter()
                    .map(as_i64)
                    .collect()
            })
            .collect();
        Subtorus::new(d, &dirs, &e.apply(&self.base))
    }
}

/// A connected component of the singular set of the orbifold with constant
/// isotropy.
#[derive(Clone, Debug, PartialEq)]
pub struct Stratum {
    pub dim: usize,
    pub codim: usize,
    /// Exact square of the stratum volume (1 for points).
    pub volume2: Rational,
    /// Indices into the group's element list of the pointwise stabiliser.
    pub isotropy: Vec<usize>,
    /// Isotropy elements whose fixed space has exactly the stratum dimension.
    pub iso_max: Vec<usize>,
    pub iso_max_types: Vec<EigenvalueType>,
    /// Number of torus pieces projecting onto this stratum.
    pub component_count_upstairs: usize,
    /// A point of a representative piece, in lattice coordinates.
    pub base_point: Vec<Rational>,
    pub kernel_basis: Vec<Vec<i64>>,
    /// Index of the connected component of the singular set.
    pub singular_component: usize,
}

impl Stratum {
    pub fn volume(&self) -> f64 {
        to_f64(&self.volume2).sqrt()
    }

    pub fn isotropy_order(&self) -> usize {
        self.isotropy.len()
    }

    pub fn is_primary(&self) -> bool {
        !self.iso_max.is_empty()
    }
}

struct Family {
    tori: Vec<Subtorus>,
    stabilisers: Vec<Vec<usize>>,
}

fn closed_family(group: &CrystalGroup) -> Family {
    let d = group.dim();
    let elems = group.elements();
    let mut tori: Vec<Subtorus> = Vec::new();
    let mut seen: BTreeSet<(Vec<Vec<Rational>>, Vec<Rational>)> = BTreeSet::new();
    let mut push = |t: Subtorus, tori: &mut Vec<Subtorus>| {
        let key = (t.space.rref.clone(), t.offset.clone());
        if seen.insert(key) {
            tori.push(t);
        }
    };
    for e in &elems[1..] {
        for (kernel, base) in solve_fixed(d, &[e]) {
            push(Subtorus::new(d, &kernel, &base), &mut tori);
        }
    }
    let mut stabilisers = Vec::new();
    let mut next = 0;
    while next < tori.len() {
        let s = tori[next].clone();
        let h: Vec<usize> = (0..elems.len())
            .filter(|&i| s.fixed_pointwise_by(&elems[i]))
            .collect();
        for delta in 0..elems.len() {
            if h.contains(&delta) {
                continue;
            }
            let mut set: Vec<&AffineElement> = h[1..].iter().map(|&i| &elems[i]).collect();
            set.push(&elems[delta]);
            for (kernel, base) in solve_fixed(d, &set) {
                let t = Subtorus::new(d, &kernel, &base);
                if s.contains(&t) {
                    push(t, &mut tori);
                }
            }
        }
        stabilisers.push(h);
        next += 1;
    }
    Family { tori, stabilisers }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        let p = self.0[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.0[x] = r;
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
}

/// Circle coordinate on a one-dimensional subtorus: `s = u.(p - x0) mod 1`
/// with `u.k = 1` for the primitive direction `k`.
fn circle_coordinate(t: &Subtorus) -> Vec<i64> {
    let d = t.base.len();
    let k = &t.space.basis[0];
    let mut col = ZMatrix::zeros(d, 1);
    for i in 0..d {
        col[(i, 0)] = BigInt::from(k[i]);
    }
    let s = snf(&col);
    // u_inv k = e_0 * diag_0 * v, with diag_0 = 1 and v = +-1
    let sign = as_i64(&s.v[(0, 0)]);
    (0..d).map(|j| sign * as_i64(&s.u_inv[(0, j)])).collect()
}

fn coordinate(u: &[i64], t: &Subtorus, p: &[Rational]) -> Rational {
    frac(
        &u.iter()
            .zip(p.iter().zip(&t.base))
            .map(|(&a, (x, y))| (x - y) * Rational::from_integer(a.into()))
            .sum::<Rational>(),
    )
}

/// Singular strata of the orbifold, ordered by dimension and then by a
/// canonical representative.
pub fn strata(group: &CrystalGroup) -> Vec<Stratum> {
    let d = group.dim();
    let elems = group.elements();
    let family = closed_family(group);
    let tori = &family.tori;
    let n = tori.len();
    let fixed_dims: Vec<usize> = elems
        .iter()
        .map(|e| eigenvalue_type(&e.g).expect("group elements have finite order").fixed_dim)
        .collect();

    let index: BTreeMap<(&Vec<Vec<Rational>>, &Vec<Rational>), usize> =
        tori.iter().enumerate().map(|(i, t)| (t.key(), i)).collect();
    // images[i][h]: index of h . tori[i]
    let images: Vec<Vec<usize>> = tori
        .iter()
        .map(|t| {
            elems
                .iter()
                .map(|e| {
                    let img = t.image(e);
                    index[&img.key()]
                })
                .collect()
        })
        .collect();

    // connected components of the singular set downstairs
    let mut conn = UnionFind::new(n);
    for i in 0..n {
        for j in 0..n {
            if i != j && tori[i].dim() > tori[j].dim() && tori[i].contains(&tori[j]) {
                conn.union(i, j);
            }
        }
        for &img in &images[i] {
            conn.union(i, img);
        }
    }
    let mut orbits = UnionFind::new(n);
    for i in 0..n {
        for &img in &images[i] {
            orbits.union(i, img);
        }
    }

    let mut component_ids: BTreeMap<usize, usize> = BTreeMap::new();
    let mut out = Vec::new();
    let mut reps: Vec<usize> = (0..n).filter(|&i| orbits.find(i) == i).collect();
    reps.sort_by(|&a, &b| (tori[a].dim(), &tori[a]).cmp(&(tori[b].dim(), &tori[b])));
    for &rep in &reps {
        let t = &tori[rep];
        let h = &family.stabilisers[rep];
        let orbit_size = (0..n).filter(|&i| orbits.find(i) == rep).count();
        let stab = elems.len() / orbit_size;
        let root = conn.find(rep);
        let next_id = component_ids.len();
        let component = *component_ids.entry(root).or_insert(next_id);
        let iso_max: Vec<usize> = h.iter().copied().filter(|&i| fixed_dims[i] == t.dim()).collect();
        let make = |volume2: Rational, pieces: usize| Stratum {
            dim: t.dim(),
            codim: d - t.dim(),
            volume2,
            isotropy: h.clone(),
            iso_max: iso_max.clone(),
            iso_max_types: iso_max
                .iter()
                .map(|&i| eigenvalue_type(&elems[i].g).expect("finite order"))
                .collect(),
            component_count_upstairs: pieces,
            base_point: t.base.clone(),
            kernel_basis: t.space.basis.clone(),
            singular_component: component,
        };
        let whole = volume2(group.lattice().gram(), &t.space.basis);
        // |H| / |Stab| is the fraction of the piece seen downstairs
        let scale = Rational::new(BigInt::from(h.len()), BigInt::from(stab));

        if t.dim() != 1 {
            // TODO: split higher-dimensional subtori along codimension-one
            // cuts (count regions of the toric arrangement inside S).
            out.push(make(whole * &scale * &scale, orbit_size));
            continue;
        }

        let u = circle_coordinate(t);
        let mut cuts: Vec<Rational> = tori
            .iter()
            .filter(|c| c.dim() == 0 && t.contains(c))
            .map(|c| coordinate(&u, t, &c.base))
            .collect();
        cuts.sort();
        cuts.dedup();
        if cuts.len() <= 1 {
            out.push(make(whole * &scale * &scale, orbit_size));
            continue;
        }
        // arc j runs from cuts[j] to cuts[j + 1] (the last one wraps)
        let m = cuts.len();
        let arc_len = |j: usize| {
            if j + 1 < m {
                &cuts[j + 1] - &cuts[j]
            } else {
                Rational::one() - &cuts[m - 1] + &cuts[0]
            }
        };
        let arc_of = |s: &Rational| -> usize {
            // s is never a cut point here
            match cuts.iter().rposition(|c| c < s) {
                Some(j) => j,
                None => m - 1,
            }
        };
        let mut arcs = UnionFind::new(m);
        let k = &t.space.basis[0];
        for hidx in 0..elems.len() {
            if images[rep][hidx] != rep {
                continue;
            }
            let e = &elems[hidx];
            let gk = e.g.apply_int(&k.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>());
            let sign = if gk.iter().zip(k).all(|(a, &b)| *a == BigInt::from(b)) { 1 } else { -1 };
            let shift = coordinate(&u, t, &e.apply(&t.base));
            for j in 0..m {
                let mid = frac(&(&cuts[j] + arc_len(j) / Rational::from_integer(2.into())));
                let image = frac(&(Rational::from_integer(sign.into()) * &mid + &shift));
                arcs.union(j, arc_of(&image));
            }
        }
        let mut classes: BTreeMap<usize, (Rational, usize)> = BTreeMap::new();
        for j in 0..m {
            let root = arcs.find(j);
            let entry = classes.entry(root).or_insert((Rational::zero(), 0));
            entry.0 += arc_len(j);
            entry.1 += 1;
        }
        for (_, (fraction, count)) in classes {
            let f = fraction * &scale;
            out.push(make(&whole * &f * &f, count * orbit_size));
        }
    }
    out
}

/// Strata with nonempty `Iso^max`.
pub fn primary_filter(strata: &[Stratum]) -> Vec<Stratum> {
    strata.iter().filter(|s| s.is_primary()).cloned().collect()
}

/// For each connected component of the singular set that contains a
/// non-primary stratum, the number of primary strata in it.
pub fn incident_primary_strata(strata: &[Stratum]) -> Vec<(usize, usize)> {
    let mut by_component: BTreeMap<usize, (bool, usize)> = BTreeMap::new();
    for s in strata {
        let e = by_component.entry(s.singular_component).or_insert((false, 0));
        if s.is_primary() {
            e.1 += 1;
        } else {
            e.0 = true;
        }
    }
    by_component
        .into_iter()
        .filter(|(_, (non_primary, _))| *non_primary)
        .map(|(c, (_, count))| (c, count))
        .collect()
}

/// Sum of the volumes of the given strata.
pub fn total_volume(strata: &[Stratum]) -> f64 {
    strata.iter().map(Stratum::volume).sum()
}
