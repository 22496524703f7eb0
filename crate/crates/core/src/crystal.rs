//! Crystallographic groups: a lattice `Z^d` with Gram matrix `G`, extended by
//! a finite holonomy group `F` of integer matrices preserving `G`.
//!
//! A group element `(g, a)` acts on lattice coordinates by `x -> g x + a`,
//! with `a` defined modulo `Z^d` and stored reduced into `[0, 1)`. The group
//! is kept as one element per holonomy matrix, identity first.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeGram;
use crate::linalg::poly::{char_poly, cyclotomic_factorization, IntPoly};
use crate::linalg::rational::{format_rational, frac, parse_rational, to_f64};
use crate::linalg::{QMatrix, Rational, ZMatrix};

pub const DEFAULT_ORDER_CAP: usize = 1024;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AffineElement {
    pub g: ZMatrix,
    pub a: Vec<Rational>,
}

impl AffineElement {
    /// Reduces the translation into `[0, 1)`.
    pub fn new(g: ZMatrix, a: Vec<Rational>) -> Self {
        AffineElement {
            g,
            a: a.iter().map(frac).collect(),
        }
    }

    pub fn identity(d: usize) -> Self {
        AffineElement::new(ZMatrix::identity(d), vec![Rational::zero(); d])
    }

    /// Pure linear part, zero translation.
    pub fn linear(g: ZMatrix) -> Self {
        let d = g.rows();
        AffineElement::new(g, vec![Rational::zero(); d])
    }

    pub fn dim(&self) -> usize {
        self.g.rows()
    }

    pub fn is_identity(&self) -> bool {
        self.g.is_identity() && self.a.iter().all(Zero::is_zero)
    }

    /// `(g1, a1)(g2, a2) = (g1 g2, g1 a2 + a1 mod 1)`
    pub fn compose(&self, other: &AffineElement) -> AffineElement {
        let ga = self.g.apply(&other.a);
        let a = ga.iter().zip(&self.a).map(|(x, y)| x + y).collect();
        AffineElement::new(&self.g * &other.g, a)
    }

    /// Image of a point, not reduced modulo the lattice.
    pub fn apply(&self, x: &[Rational]) -> Vec<Rational> {
        self.g
            .apply(x)
            .into_iter()
            .zip(&self.a)
            .map(|(y, a)| y + a)
            .collect()
    }

    pub fn translation_strings(&self) -> Vec<String> {
        self.a.iter().map(format_rational).collect()
    }
}

impl fmt::Display for AffineElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, [{}])", self.g, self.translation_strings().join(", "))
    }
}

/// Eigenvalue data of a finite-order orthogonal map: `s` rotation pairs
/// `e^{+-i theta}` with `theta` in `(0, pi)`, `r` eigenvalues `-1`, and the
/// remaining `fixed_dim` eigenvalues `+1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenvalueType {
    pub s: usize,
    /// Rotation angles in radians, ascending, repeated by multiplicity.
    pub thetas: Vec<f64>,
    /// The same angles as exact fractions of a full turn.
    #[serde(with = "crate::linalg::rational::serde_string_vec")]
    pub turns: Vec<Rational>,
    pub r: usize,
    pub fixed_dim: usize,
}

impl EigenvalueType {
    /// Codimension of the fixed space, `2s + r`.
    pub fn k(&self) -> usize {
        2 * self.s + self.r
    }
}

impl fmt::Display for EigenvalueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let turns: Vec<String> = self
            .turns
            .iter()
            .map(|t| format!("2pi*{}", format_rational(t)))
            .collect();
        write!(f, "E({};{})", turns.join(","), self.r)
    }
}

/// `p`-th elementary symmetric function of the eigenvalues of `g`: the trace
/// of the induced map on `p`-forms.
pub fn tr_p(g: &ZMatrix, p: usize) -> i64 {
    let d = g.rows();
    assert!(p <= d, "form degree {p} exceeds dimension {d}");
    let c = char_poly(g).coeff(d - p);
    let v = if p.is_multiple_of(2) { c } else { -c };
    v.to_i64().expect("trace fits in i64")
}

/// Smallest `n >= 1` with `g^n = I`, searching up to `cap`.
pub fn matrix_order(g: &ZMatrix, cap: usize) -> Option<usize> {
    let id = ZMatrix::identity(g.rows());
    let mut acc = g.clone();
    for n in 1..=cap {
        if acc == id {
            return Some(n);
        }
        acc = &acc * g;
    }
    None
}

struct Factored {
    fixed: usize,
    minus: usize,
    cyclo: Vec<usize>,
    // char poly with all (x - 1) factors removed
    normal: IntPoly,
}

fn factor_finite_order(g: &ZMatrix) -> Result<Factored> {
    let d = g.rows();
    let cp = char_poly(g);
    let (fixed, normal) = cp.strip_factor(&IntPoly::linear(1));
    let (minus, rest) = normal.strip_factor(&IntPoly::linear(-1));
    // for a map of finite order the algebraic and geometric multiplicities agree
    if fixed != d - g.minus_scalar(1).rank() || minus != d - g.minus_scalar(-1).rank() {
        return Err(Error::NotFiniteOrder);
    }
    let cyclo = cyclotomic_factorization(&rest).ok_or(Error::NotFiniteOrder)?;
    let mut order = 1usize;
    if minus > 0 {
        order = 2;
    }
    for &n in &cyclo {
        order = order.lcm(&n);
    }
    if u32::try_from(order).ok().map(|e| g.pow(e).is_identity()) != Some(true) {
        return Err(Error::NotFiniteOrder);
    }
    Ok(Factored {
        fixed,
        minus,
        cyclo,
        normal,
    })
}

/// Eigenvalue type of a finite-order integer matrix, read off an exact
/// factorization of its characteristic polynomial into cyclotomic factors.
pub fn eigenvalue_type(g: &ZMatrix) -> Result<EigenvalueType> {
    let f = factor_finite_order(g)?;
    let mut turns = Vec::new();
    for &n in &f.cyclo {
        for j in 1..n {
            if 2 * j < n && j.gcd(&n) == 1 {
                turns.push(Rational::new(BigInt::from(j), BigInt::from(n)));
            }
        }
    }
    turns.sort();
    let thetas = turns.iter().map(|t| 2.0 * PI * to_f64(t)).collect();
    Ok(EigenvalueType {
        s: turns.len(),
        thetas,
        turns,
        r: f.minus,
        fixed_dim: f.fixed,
    })
}

/// `|det(I - A)|` where `A` is the restriction of `g` to the orthogonal
/// complement of its fixed space: `|q(1)|` for `char_poly = (x - 1)^f q`.
pub fn det_normal_factor(g: &ZMatrix) -> Result<Rational> {
    let f = factor_finite_order(g)?;
    Ok(Rational::from_integer(f.normal.eval(&BigInt::one()).abs()))
}

/// `g^T G g == G`, exactly.
pub fn preserves_gram(g: &ZMatrix, gram: &QMatrix) -> bool {
    let gq = g.to_rational();
    &(&gq.transpose() * gram) * &gq == *gram
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrystalGroup {
    lattice: LatticeGram,
    elements: Vec<AffineElement>,
    generators: Vec<AffineElement>,
    index: HashMap<ZMatrix, usize>,
}

/// Closes `generators` under composition and validates the result.
///
/// Errors name the offending generator by position. The translation parts
/// must be consistent: one translation class per holonomy matrix, otherwise
/// the lattice was not the full translation subgroup.
pub fn build_group(
    lattice: LatticeGram,
    generators: Vec<AffineElement>,
    order_cap: usize,
) -> Result<CrystalGroup> {
    let d = lattice.dim();
    let one = BigInt::one();
    for (i, gen) in generators.iter().enumerate() {
        if gen.g.rows() != d || !gen.g.is_square() || gen.a.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "generator {i} does not act on dimension {d}"
            )));
        }
        let det = gen.g.determinant()?;
        if det.abs() != one {
            return Err(Error::NonInvertible {
                index: i,
                det: det.to_string(),
            });
        }
        if !preserves_gram(&gen.g, lattice.gram()) {
            return Err(Error::NotOrthogonal { index: i });
        }
    }

    let mut elements = vec![AffineElement::identity(d)];
    let mut index: HashMap<ZMatrix, usize> = HashMap::new();
    index.insert(ZMatrix::identity(d), 0);
    let mut next = 0;
    while next < elements.len() {
        for gen in &generators {
            let prod = elements[next].compose(gen);
            match index.get(&prod.g) {
                Some(&j) => {
                    if elements[j].a != prod.a {
                        return Err(Error::InconsistentTranslation {
                            matrix: prod.g.to_string(),
                            first: elements[j].translation_strings().join(", "),
                            second: prod.translation_strings().join(", "),
                        });
                    }
                }
                None => {
                    if elements.len() >= order_cap {
                        return Err(Error::OrderCapExceeded { cap: order_cap });
                    }
                    index.insert(prod.g.clone(), elements.len());
                    elements.push(prod);
                }
            }
        }
        next += 1;
    }
    Ok(CrystalGroup {
        lattice,
        elements,
        generators,
        index,
    })
}

impl CrystalGroup {
    /// The lattice itself, with trivial holonomy.
    pub fn torus(lattice: LatticeGram) -> Self {
        build_group(lattice, Vec::new(), 1).expect("trivial group")
    }

    pub fn lattice(&self) -> &LatticeGram {
        &self.lattice
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    /// `|F|`
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[AffineElement] {
        &self.elements
    }

    pub fn generators(&self) -> &[AffineElement] {
        &self.generators
    }

    pub fn index_of(&self, g: &ZMatrix) -> Option<usize> {
        self.index.get(g).copied()
    }

    pub fn element_for(&self, g: &ZMatrix) -> Option<&AffineElement> {
        self.index_of(g).map(|i| &self.elements[i])
    }

    pub fn product_index(&self, i: usize, j: usize) -> usize {
        let g = &self.elements[i].g * &self.elements[j].g;
        self.index[&g]
    }

    pub fn inverse_index(&self, i: usize) -> usize {
        (0..self.order())
            .find(|&j| self.product_index(i, j) == 0)
            .expect("finite group elements are invertible")
    }

    /// JSON description in the input schema, listing the generators.
    pub fn to_spec(&self) -> GroupSpec {
        let d = self.dim();
        let gram = self.lattice.gram();
        GroupSpec {
            dimension: d,
            gram: (0..d)
                .map(|i| (0..d).map(|j| format_rational(&gram[(i, j)])).collect())
                .collect(),
            generators: self
                .generators
                .iter()
                .map(|e| GeneratorSpec {
                    matrix: e.g.to_i64_rows().expect("small generator entries"),
                    translation: e.translation_strings(),
                })
                .collect(),
        }
    }
}

/// `{"dimension": d, "gram": [["p/q", ...], ...], "generators": [...]}`
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub dimension: usize,
    pub gram: Vec<Vec<String>>,
    pub generators: Vec<GeneratorSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub matrix: Vec<Vec<i64>>,
    pub translation: Vec<String>,
}

impl GroupSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("group spec serializes")
    }

    /// Checks shapes against `dimension`, then builds and validates the group.
    pub fn build(&self, order_cap: usize) -> Result<CrystalGroup> {
        let d = self.dimension;
        if d == 0 {
            return Err(Error::Schema("dimension must be positive".into()));
        }
        if self.gram.len() != d || self.gram.iter().any(|r| r.len() != d) {
            return Err(Error::Schema(format!("gram must be {d}x{d}")));
        }
        let rows = self
            .gram
            .iter()
            .map(|r| r.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let lattice = LatticeGram::new(QMatrix::from_rows(rows)?)?;
        let mut gens = Vec::with_capacity(self.generators.len());
        for (i, g) in self.generators.iter().enumerate() {
            if g.matrix.len() != d || g.matrix.iter().any(|r| r.len() != d) {
                return Err(Error::Schema(format!("generator {i}: matrix must be {d}x{d}")));
            }
            if g.translation.len() != d {
                return Err(Error::Schema(format!(
                    "generator {i}: translation must have {d} entries"
                )));
            }
            let a = g
                .translation
                .iter()
                .map(|s| parse_rational(s))
                .collect::<Result<Vec<_>>>()?;
            gens.push(AffineElement::new(ZMatrix::from_rows(&g.matrix)?, a));
        }
        build_group(lattice, gens, order_cap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rational::{int, ratio};
    use proptest::prelude::*;

    fn z(rows: &[Vec<i64>]) -> ZMatrix {
        ZMatrix::from_rows(rows).unwrap()
    }

    fn rot90() -> ZMatrix {
        z(&[vec![0, -1], vec![1, 0]])
    }

    fn gamma(d: usize, k: usize) -> ZMatrix {
        let diag: Vec<i64> = (0..d).map(|i| if i < k { -1 } else { 1 }).collect();
        ZMatrix::diagonal(&diag)
    }

    fn triangular_gram3() -> LatticeGram {
        LatticeGram::new(
            QMatrix::from_rows(vec![
                vec![int(1), ratio(1, 2), int(0)],
                vec![ratio(1, 2), int(1), int(0)],
                vec![int(0), int(0), int(1)],
            ])
            .unwrap(),
        )
        .unwrap()
    }

    // sum of principal p x p minors: the trace on the p-th exterior power
    fn exterior_trace(g: &ZMatrix, p: usize) -> i64 {
        let d = g.rows();
        let mut total = 0i64;
        for mask in 0u32..(1 << d) {
            if mask.count_ones() as usize != p {
                continue;
            }
            let idx: Vec<usize> = (0..d).filter(|i| mask & (1 << i) != 0).collect();
            let rows: Vec<Vec<i64>> = idx
                .iter()
                .map(|&i| idx.iter().map(|&j| g[(i, j)].to_i64().unwrap()).collect())
                .collect();
            total += if p == 0 { 1 } else { z(&rows).determinant().unwrap().to_i64().unwrap() };
        }
        total
    }

    #[test]
    fn torus_group() {
        let g = CrystalGroup::torus(LatticeGram::standard(2));
        assert_eq!(g.order(), 1);
        assert!(g.elements()[0].is_identity());
    }

    #[test]
    fn pillow_group() {
        let g = build_group(
            LatticeGram::standard(2),
            vec![AffineElement::linear(rot90())],
            DEFAULT_ORDER_CAP,
        )
        .unwrap();
        assert_eq!(g.order(), 4);
        for i in 0..4 {
            for j in 0..4 {
                let k = g.product_index(i, j);
                assert_eq!(g.elements()[k], g.elements()[i].compose(&g.elements()[j]));
            }
            let inv = g.inverse_index(i);
            assert!(g.elements()[i].compose(&g.elements()[inv]).is_identity());
        }
    }

    #[test]
    fn triangular_manifold_group() {
        let rot = z(&[vec![-1, -1, 0], vec![1, 0, 0], vec![0, 0, 1]]);
        let g = build_group(
            triangular_gram3(),
            vec![AffineElement::new(rot.clone(), vec![int(0), int(0), ratio(1, 3)])],
            DEFAULT_ORDER_CAP,
        )
        .unwrap();
        assert_eq!(g.order(), 3);
        let et = eigenvalue_type(&rot).unwrap();
        assert_eq!(et.turns, vec![ratio(1, 3)]);
        assert_eq!(et.fixed_dim, 1);
    }

    #[test]
    fn dual_coordinate_rotation_is_not_orthogonal() {
        // the same rotation written for dual coordinates fails g^T G g = G
        let dual_rot = z(&[vec![0, -1, 0], vec![1, -1, 0], vec![0, 0, 1]]);
        assert!(!preserves_gram(&dual_rot, triangular_gram3().gram()));
        assert_eq!(
            build_group(triangular_gram3(), vec![AffineElement::linear(dual_rot)], 16),
            Err(Error::NotOrthogonal { index: 0 })
        );
    }

    #[test]
    fn validation_errors() {
        let l = LatticeGram::standard(2);
        let shear = z(&[vec![1, 1], vec![0, 1]]);
        assert_eq!(
            build_group(l.clone(), vec![AffineElement::linear(shear)], 16),
            Err(Error::NotOrthogonal { index: 0 })
        );
        let doubled = ZMatrix::diagonal(&[2, 1]);
        assert!(matches!(
            build_group(l.clone(), vec![AffineElement::linear(doubled)], 16),
            Err(Error::NonInvertible { index: 0, .. })
        ));
        // a half translation alongside the lattice: not the full translation group
        let half = AffineElement::new(ZMatrix::identity(2), vec![ratio(1, 2), int(0)]);
        assert!(matches!(
            build_group(l.clone(), vec![half], 16),
            Err(Error::InconsistentTranslation { .. })
        ));
        assert_eq!(
            build_group(l, vec![AffineElement::linear(rot90())], 3),
            Err(Error::OrderCapExceeded { cap: 3 })
        );
    }

    #[test]
    fn traces() {
        assert_eq!(tr_p(&rot90(), 0), 1);
        assert_eq!(tr_p(&rot90(), 1), 0);
        assert_eq!(tr_p(&rot90(), 2), 1);
        assert_eq!(tr_p(&gamma(6, 3), 3), 0);
        assert_eq!(tr_p(&ZMatrix::identity(5), 2), 10);
    }

    #[test]
    fn eigenvalue_types() {
        let id = eigenvalue_type(&ZMatrix::identity(3)).unwrap();
        assert_eq!((id.s, id.r, id.fixed_dim), (0, 0, 3));
        let r = eigenvalue_type(&rot90()).unwrap();
        assert_eq!((r.s, r.r, r.fixed_dim), (1, 0, 0));
        assert!((r.thetas[0] - PI / 2.0).abs() < 1e-15);
        assert_eq!(r.to_string(), "E(2pi*1/4;0)");
        for k in 0..=4 {
            let t = eigenvalue_type(&gamma(4, k)).unwrap();
            assert_eq!((t.s, t.r, t.fixed_dim), (0, k, 4 - k));
        }
        assert_eq!(
            eigenvalue_type(&z(&[vec![1, 1], vec![0, 1]])),
            Err(Error::NotFiniteOrder)
        );
        assert_eq!(
            eigenvalue_type(&z(&[vec![2, 1], vec![1, 1]])),
            Err(Error::NotFiniteOrder)
        );
    }

    #[test]
    fn normal_determinants() {
        assert_eq!(det_normal_factor(&rot90()).unwrap(), int(2));
        assert_eq!(det_normal_factor(&gamma(5, 3)).unwrap(), int(8));
        assert_eq!(det_normal_factor(&ZMatrix::identity(3)).unwrap(), int(1));
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"dimension": 2, "gram": [["1","0"],["0","1"]],
            "generators": [{"matrix": [[0,-1],[1,0]], "translation": ["0","0"]}]}"#;
        let spec = GroupSpec::from_json(text).unwrap();
        let g = spec.build(DEFAULT_ORDER_CAP).unwrap();
        assert_eq!(g.order(), 4);
        assert_eq!(GroupSpec::from_json(&g.to_spec().to_json()).unwrap(), spec);
        assert!(matches!(
            GroupSpec::from_json(r#"{"dimension": 1, "gram": [["1"]], "generators": [], "x": 1}"#),
            Err(Error::Schema(_))
        ));
        let bad_shape = r#"{"dimension": 2, "gram": [["1"]], "generators": []}"#;
        assert!(matches!(
            GroupSpec::from_json(bad_shape).unwrap().build(16),
            Err(Error::Schema(_))
        ));
    }

    // finite-order integer matrices: signed permutations, their products with
    // small rotation blocks, conjugated by a unimodular matrix
    fn finite_order_matrix() -> impl Strategy<Value = ZMatrix> {
        let blocks = prop::collection::vec(0usize..6, 1..4);
        (blocks, prop::collection::vec(-2i64..3, 3)).prop_map(|(kinds, shear)| {
            let block = |k: usize| match k {
                0 => ZMatrix::diagonal(&[1]),
                1 => ZMatrix::diagonal(&[-1]),
                2 => z(&[vec![0, -1], vec![1, 0]]),
                3 => z(&[vec![-1, -1], vec![1, 0]]),
                4 => z(&[vec![0, -1], vec![1, 1]]),
                _ => z(&[vec![0, 1], vec![1, 0]]),
            };
            let mut m = block(kinds[0]);
            for &k in &kinds[1..] {
                m = m.direct_sum(&block(k));
            }
            let n = m.rows();
            let mut p = ZMatrix::identity(n);
            for (i, &s) in shear.iter().enumerate() {
                let (a, b) = (i % n, (i + 1) % n);
                if a != b {
                    p.add_row_multiple(a, b, &BigInt::from(s));
                }
            }
            let pinv = p.to_rational().inverse().unwrap();
            let pinv = ZMatrix::from_rows(
                &pinv
                    .to_rows()
                    .iter()
                    .map(|r| r.iter().map(|x| x.to_integer().to_i64().unwrap()).collect())
                    .collect::<Vec<_>>(),
            )
            .unwrap();
            &(&p * &m) * &pinv
        })
    }

    proptest! {
        #[test]
        fn trace_matches_exterior_power(g in finite_order_matrix()) {
            prop_assume!(g.rows() <= 4);
            for p in 0..=g.rows() {
                prop_assert_eq!(tr_p(&g, p), exterior_trace(&g, p));
            }
        }

        #[test]
        fn eigen_type_is_consistent(g in finite_order_matrix()) {
            let et = eigenvalue_type(&g).unwrap();
            prop_assert_eq!(2 * et.s + et.r + et.fixed_dim, g.rows());
            prop_assert!(et.thetas.iter().all(|&t| t > 0.0 && t < PI));
            prop_assert!(et.thetas.windows(2).all(|w| w[0] <= w[1]));
            let expect = 2f64.powi(et.r as i32)
                * et.thetas.iter().map(|t| 4.0 * (t / 2.0).sin().powi(2)).product::<f64>();
            let exact = to_f64(&det_normal_factor(&g).unwrap());
            prop_assert!((exact - expect).abs() < 1e-12 * exact.max(1.0));
            prop_assert!(matrix_order(&g, 64).is_some());
        }
    }
}
