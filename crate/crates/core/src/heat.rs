//! Leading heat invariants of flat orbifolds.
//!
//! For a flat quotient `R^d / Gamma` the small-time heat trace on `p`-forms is
//! exactly (up to `O(e^{-c/t})`)
//!
//! ```text
//! C(d,p) vol(O) (4 pi t)^{-d/2}
//!     + sum_N b_0^p(N) / |Iso(N)| (4 pi t)^{-dim N / 2}
//! ```
//!
//! where `b_0^p(N) = vol(N) sum_{gamma in Iso^max(N)} tr_p(gamma) / |det(I - A)|`.
//! Volumes are square roots of rationals, so coefficients are kept as
//! [`SurdSum`]s and only turned into floats on evaluation.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::crystal::{det_normal_factor, matrix_order, tr_p, CrystalGroup, EigenvalueType};
use crate::krawtchouk::{binomial, krawtchouk};
use crate::linalg::rational::{format_rational, int, ratio, to_f64};
use crate::linalg::{Rational, ZMatrix};
use crate::strata::Stratum;
use crate::{Error, Result};

/// A finite sum `sum_i c_i sqrt(r_i)` with rational `c_i` and squarefree
/// positive integer radicands.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SurdSum {
    terms: BTreeMap<BigInt, Rational>,
}

/// Writes `n = s^2 m`, returning `(s, m)`. Trial division stops after a
/// bounded number of steps; any leftover factor stays in `m`.
fn square_part(n: &BigInt) -> (BigInt, BigInt) {
    let mut rest = n.clone();
    let mut root = BigInt::one();
    let mut p = BigInt::from(2u32);
    let limit = BigInt::from(1_000_000u32);
    while &p * &p <= rest && p <= limit {
        let pp = &p * &p;
        while (&rest % &pp).is_zero() {
            rest /= &pp;
            root *= &p;
        }
        p += 1u32;
    }
    (root, rest)
}

impl SurdSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn rational(q: Rational) -> Self {
        let mut s = Self::zero();
        s.add_term(q, &Rational::one());
        s
    }

    /// `coeff * sqrt(radicand)` for a non-negative rational radicand.
    pub fn term(coeff: Rational, radicand: &Rational) -> Self {
        let mut s = Self::zero();
        s.add_term(coeff, radicand);
        s
    }

    pub fn add_term(&mut self, coeff: Rational, radicand: &Rational) {
        assert!(!radicand.is_negative(), "negative radicand");
        if coeff.is_zero() || radicand.is_zero() {
            return;
        }
        // sqrt(n/d) = sqrt(n d) / d
        let nd = radicand.numer() * radicand.denom();
        let (root, free) = square_part(&nd);
        let c = coeff * Rational::new(root, radicand.denom().clone());
        let entry = self.terms.entry(free.clone()).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&free);
        }
    }

    pub fn add(&mut self, other: &SurdSum) {
        for (r, c) in &other.terms {
            self.add_term(c.clone(), &Rational::from_integer(r.clone()));
        }
    }

    pub fn scale(&self, q: &Rational) -> SurdSum {
        let mut out = SurdSum::zero();
        for (r, c) in &self.terms {
            out.add_term(c * q, &Rational::from_integer(r.clone()));
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The exact value when it is rational.
    pub fn as_rational(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&BigInt::one()).cloned(),
            _ => None,
        }
    }

    pub fn value(&self) -> f64 {
        self.terms
            .iter()
            .map(|(r, c)| to_f64(c) * r.to_f64().unwrap_or(f64::INFINITY).sqrt())
            .fold(0.0, |acc, x| acc + x)
    }

    /// `(coefficient, radicand)` pairs, radicands ascending.
    pub fn terms(&self) -> impl Iterator<Item = (&Rational, &BigInt)> {
        self.terms.iter().map(|(r, c)| (c, r))
    }
}

impl fmt::Display for SurdSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(r, c)| {
                if r.is_one() {
                    format_rational(c)
                } else {
                    format!("{}*sqrt({})", format_rational(c), r)
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Serialize for SurdSum {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.terms.len()))?;
        for (r, c) in &self.terms {
            seq.serialize_element(&serde_json::json!({
                "coefficient": format_rational(c),
                "radicand": r.to_string(),
            }))?;
        }
        seq.end()
    }
}

/// `tr_p(g) / |det(I - A)|`, the pointwise leading contribution of `g`.
pub fn b0_p_element(g: &ZMatrix, p: usize) -> Result<Rational> {
    let factor = det_normal_factor(g)?;
    Ok(int(tr_p(g, p)) / factor)
}

/// `b_0^1` of an element read off its eigenvalue type in dimension `d`.
pub fn b0_1_eigentype(et: &EigenvalueType, d: usize) -> f64 {
    let k = et.k() as f64;
    let cos_sum: f64 = et.thetas.iter().map(|t| 2.0 * t.cos()).sum();
    let csc: f64 = et.thetas.iter().map(|t| (t / 2.0).sin().powi(-2)).product();
    (d as f64 - k - et.r as f64 + cos_sum) * 2f64.powi(-(et.k() as i32)) * csc
}

/// `b_0^1(N) / vol(N)` for a codimension-2 stratum with cyclic isotropy of
/// order `m`.
pub fn b0_1_codim2_cyclic(d: usize, m: usize) -> Rational {
    if m <= 1 {
        return Rational::zero();
    }
    let (d, m) = (d as i64, m as i64);
    ratio((d - 2) * (m * m - 1), 12) + ratio(m * m - 6 * m + 5, 6)
}

/// `b_0^0(N) / vol(N)` for a codimension-2 stratum with cyclic isotropy of
/// order `m`.
pub fn b0_0_codim2_cyclic(m: usize) -> Rational {
    if m <= 1 {
        return Rational::zero();
    }
    let m = m as i64;
    ratio(m * m - 1, 12)
}

/// Closed forms, over `j = 1..m-1`, of
/// `sum csc^2(pi j/m)`, `sum cos(2 pi j/m) csc^2(pi j/m)`,
/// `sum cos(2 pi j/m) csc^4(pi j/m)` and `sum csc^4(pi j/m)`.
pub fn trig_sums(m: usize) -> (Rational, Rational, Rational, Rational) {
    let m = m as i64;
    let m2 = m * m;
    let m4 = m2 * m2;
    (
        ratio(m2 - 1, 3),
        ratio(m2 - 6 * m + 5, 3),
        ratio(m4 - 20 * m2 + 19, 45),
        ratio(m4 + 10 * m2 - 11, 45),
    )
}

/// The same four sums evaluated term by term.
pub fn trig_sums_direct(m: usize) -> (f64, f64, f64, f64) {
    let mut out = (0.0, 0.0, 0.0, 0.0);
    for j in 1..m {
        let x = PI * j as f64 / m as f64;
        let csc2 = x.sin().powi(-2);
        let c = (2.0 * x).cos();
        out.0 += csc2;
        out.1 += c * csc2;
        out.2 += c * csc2 * csc2;
        out.3 += csc2 * csc2;
    }
    out
}

/// `b_0^1(N) / vol(N)` for a codimension-4 stratum whose isotropy is cyclic
/// of order `m`, generated by a rotation through `2 pi / m` in two
/// orthogonal planes.
pub fn b0_1_codim4_constant_angle(d: usize, m: usize) -> Rational {
    if m <= 1 {
        return Rational::zero();
    }
    let (_, _, cos4, csc4) = trig_sums(m);
    (int(4) * cos4 + int(d as i64 - 4) * csc4) / int(16)
}

fn check_degree(d: usize, p: usize) -> Result<()> {
    if p > d {
        return Err(Error::InvalidDegree { d, p });
    }
    Ok(())
}

/// `b_0^p(N) / vol(N)`: the sum of [`b0_p_element`] over `Iso^max(N)`.
pub fn stratum_b0_per_volume(group: &CrystalGroup, stratum: &Stratum, p: usize) -> Result<Rational> {
    check_degree(group.dim(), p)?;
    let elems = group.elements();
    let mut sum = Rational::zero();
    for &i in &stratum.iso_max {
        sum += b0_p_element(&elems[i].g, p)?;
    }
    Ok(sum)
}

/// `b_0^p(N)`.
pub fn stratum_b0(group: &CrystalGroup, stratum: &Stratum, p: usize) -> Result<SurdSum> {
    let per = stratum_b0_per_volume(group, stratum, p)?;
    Ok(SurdSum::term(per, &stratum.volume2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Parity {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Parity {
    fn of(codim: usize) -> Parity {
        if codim.is_multiple_of(2) {
            Parity::Plus
        } else {
            Parity::Minus
        }
    }
}

/// `B_epsilon^p`: the sum of `b_0^p(N) / |Iso(N)|` over primary strata of the
/// least codimension `k_epsilon` with parity `epsilon`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParityInvariant {
    pub epsilon: Parity,
    pub k_epsilon: Option<usize>,
    pub value: SurdSum,
}

impl ParityInvariant {
    pub fn value_f64(&self) -> f64 {
        self.value.value()
    }
}

/// Exact total volume of the given strata.
pub fn strata_volume(strata: &[Stratum]) -> SurdSum {
    let mut v = SurdSum::zero();
    for s in strata {
        v.add_term(Rational::one(), &s.volume2);
    }
    v
}

/// `(B_+^p, B_-^p)`.
pub fn parity_invariants(
    group: &CrystalGroup,
    strata: &[Stratum],
    p: usize,
) -> Result<(ParityInvariant, ParityInvariant)> {
    let mut out = Vec::with_capacity(2);
    for eps in [Parity::Plus, Parity::Minus] {
        let primary: Vec<&Stratum> = strata
            .iter()
            .filter(|s| s.is_primary() && Parity::of(s.codim) == eps)
            .collect();
        let k = primary.iter().map(|s| s.codim).min();
        let mut value = SurdSum::zero();
        if let Some(k) = k {
            for s in primary.iter().filter(|s| s.codim == k) {
                let b = stratum_b0(group, s, p)?;
                value.add(&b.scale(&ratio(1, s.isotropy_order() as i64)));
            }
        }
        out.push(ParityInvariant {
            epsilon: eps,
            k_epsilon: k,
            value,
        });
    }
    let minus = out.pop().expect("two parities");
    let plus = out.pop().expect("two parities");
    Ok((plus, minus))
}

/// Total volume of the odd-codimension singular set of a quotient by
/// reflections in `k` coordinates: `2^{k+1} B_-^p / K_p^d(k)`.
pub fn singular_volume_from_b(b_minus: &SurdSum, d: usize, k: usize, p: usize) -> Result<SurdSum> {
    if k > d || k == 0 {
        return Err(Error::InvalidCodim { d, k });
    }
    check_degree(d, p)?;
    let kr = krawtchouk(d, p, k);
    if kr == 0 {
        return Err(Error::KrawtchoukZero { d, p, k });
    }
    let two_k1 = Rational::from_integer(BigInt::from(2u32).pow(k as u32 + 1));
    Ok(b_minus.scale(&(two_k1 / int(kr))))
}

/// Float form of [`singular_volume_from_b`].
pub fn singular_volume_from_b_f64(b_minus: f64, d: usize, k: usize, p: usize) -> Result<f64> {
    if k > d || k == 0 {
        return Err(Error::InvalidCodim { d, k });
    }
    check_degree(d, p)?;
    let kr = krawtchouk(d, p, k);
    if kr == 0 {
        return Err(Error::KrawtchoukZero { d, p, k });
    }
    Ok(2f64.powi(k as i32 + 1) * b_minus / kr as f64)
}

/// `C(d,p)/6 - C(d-2,p-1)`, the factor in front of the total scalar
/// curvature in `a_1^p`.
pub fn a1_factor(d: usize, p: usize) -> Rational {
    let (d, p) = (d as i64, p as i64);
    ratio(binomial(d, p), 6) - int(binomial(d - 2, p - 1))
}

/// `(a_0^p, a_1^p) = (C(d,p) vol, (C(d,p)/6 - C(d-2,p-1)) int tau)`.
pub fn a_coefficients(d: usize, p: usize, vol: f64, total_scalar_curvature: f64) -> (f64, f64) {
    let a0 = binomial(d as i64, p as i64) as f64 * vol;
    let a1 = to_f64(&a1_factor(d, p)) * total_scalar_curvature;
    (a0, a1)
}

/// `sum_e c_e (4 pi t)^e` over finitely many half-integer exponents `e`,
/// keyed by `2e`.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticExpansion {
    pub d: usize,
    pub terms: BTreeMap<i32, SurdSum>,
}

impl AsymptoticExpansion {
    pub fn new(d: usize) -> Self {
        AsymptoticExpansion {
            d,
            terms: BTreeMap::new(),
        }
    }

    /// Adds `c (4 pi t)^{-dim/2}`.
    pub fn add(&mut self, dim: usize, c: &SurdSum) {
        let e = self.terms.entry(-(dim as i32)).or_default();
        e.add(c);
    }

    /// Coefficient of `(4 pi t)^{twice_exponent / 2}`.
    pub fn coefficient(&self, twice_exponent: i32) -> SurdSum {
        self.terms.get(&twice_exponent).cloned().unwrap_or_default()
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        let x = 4.0 * PI * t;
        self.terms
            .iter()
            .map(|(&e2, c)| c.value() * x.powf(f64::from(e2) / 2.0))
            .fold(0.0, |acc, v| acc + v)
    }

    /// Largest coefficient difference over the union of exponents.
    pub fn max_difference(&self, other: &AsymptoticExpansion) -> f64 {
        self.terms
            .keys()
            .chain(other.terms.keys())
            .map(|k| (self.coefficient(*k).value() - other.coefficient(*k).value()).abs())
            .fold(0.0, f64::max)
    }

    /// Exponents with a nonzero coefficient.
    pub fn nonzero_exponents(&self) -> Vec<i32> {
        self.terms.iter().filter(|(_, c)| !c.is_zero()).map(|(k, _)| *k).collect()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let terms: Vec<serde_json::Value> = self
            .terms
            .iter()
            .rev()
            .map(|(&e2, c)| {
                serde_json::json!({
                    "exponent": format_rational(&ratio(i64::from(e2), 2)),
                    "coefficient": c.value(),
                    "exact": c,
                })
            })
            .collect();
        serde_json::json!({ "d": self.d, "terms": terms })
    }
}

/// The flat heat-trace expansion assembled from the strata.
pub fn assemble_expansion(group: &CrystalGroup, strata: &[Stratum], p: usize) -> Result<AsymptoticExpansion> {
    let d = group.dim();
    check_degree(d, p)?;
    let mut exp = AsymptoticExpansion::new(d);
    let bulk = ratio(binomial(d as i64, p as i64), group.order() as i64);
    exp.add(d, &SurdSum::term(bulk, group.lattice().det_gram()));
    // flat metric: the curvature term a_1 vanishes
    debug_assert!(a_coefficients(d, p, 1.0, 0.0).1 == 0.0);
    for s in strata {
        let per = stratum_b0_per_volume(group, s, p)? / int(s.isotropy_order() as i64);
        exp.add(s.dim, &SurdSum::term(per, &s.volume2));
    }
    Ok(exp)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict")]
pub enum Verdict {
    /// No singular points: the quotient is a manifold.
    NoSingularStrata,
    /// A primary stratum of odd codimension exists, so the orbifold is not
    /// 0-isospectral to any manifold.
    OddCodimensionPrimary { codim: usize, strata: usize },
    /// Codimension-2 singular set with cyclic isotropy:
    /// `c_2^1 - (d-6) c_2^0 > 0`, which is zero for every manifold.
    JointSpectrumMargin {
        margin: SurdSum,
        margin_value: f64,
        expansion_margin: f64,
    },
}

/// Decides, from strata and the 0- and 1-form expansions, whether the
/// orbifold can be told apart from every manifold by its spectra.
pub fn manifold_discriminator(
    group: &CrystalGroup,
    strata: &[Stratum],
    p0: &AsymptoticExpansion,
    p1: &AsymptoticExpansion,
) -> Result<Verdict> {
    let d = group.dim();
    if strata.is_empty() {
        return Ok(Verdict::NoSingularStrata);
    }
    let odd: Vec<&Stratum> = strata.iter().filter(|s| s.is_primary() && s.codim % 2 == 1).collect();
    if let Some(codim) = odd.iter().map(|s| s.codim).min() {
        return Ok(Verdict::OddCodimensionPrimary {
            codim,
            strata: odd.iter().filter(|s| s.codim == codim).count(),
        });
    }
    let min_codim = strata.iter().map(|s| s.codim).min().expect("nonempty");
    if min_codim != 2 {
        return Err(Error::NotApplicable(format!(
            "singular set has codimension {min_codim}"
        )));
    }
    let elems = group.elements();
    let mut margin = SurdSum::zero();
    for s in strata.iter().filter(|s| s.codim == 2) {
        let m = s.isotropy_order();
        let cyclic = s
            .isotropy
            .iter()
            .any(|&i| matrix_order(&elems[i].g, m) == Some(m));
        if !cyclic {
            return Err(Error::NotApplicable(format!(
                "codimension-2 stratum with non-cyclic isotropy of order {m}"
            )));
        }
        let mi = m as i64;
        let per = ratio(3 * mi * mi - 6 * mi + 3, 6) / int(mi);
        margin.add(&SurdSum::term(per, &s.volume2));
    }
    let key = -(d as i32 - 2);
    let expansion_margin = p1.coefficient(key).value() - (d as f64 - 6.0) * p0.coefficient(key).value();
    let margin_value = margin.value();
    let deviation = (expansion_margin - margin_value).abs();
    if deviation > 1e-9 * margin_value.abs().max(1.0) {
        return Err(Error::ToleranceViolation {
            what: "stratum margin against expansion coefficients".into(),
            deviation,
            tolerance: 1e-9,
        });
    }
    Ok(Verdict::JointSpectrumMargin {
        margin,
        margin_value,
        expansion_margin,
    })
}

/// Number-theoretic helper for the sweeps: the eigenvalue type of a rotation
/// by `2 pi j / m` in each of `planes` orthogonal planes.
pub fn rotation_type(j: usize, m: usize, planes: usize) -> EigenvalueType {
    let g = j.gcd(&m);
    let (j, m) = (j / g, m / g);
    let folded = if 2 * j > m { m - j } else { j };
    if 2 * folded == m {
        return EigenvalueType {
            s: 0,
            thetas: vec![],
            turns: vec![],
            r: 2 * planes,
            fixed_dim: 0,
        };
    }
    let turn = Rational::new(BigInt::from(folded), BigInt::from(m));
    let theta = 2.0 * PI * to_f64(&turn);
    EigenvalueType {
        s: planes,
        thetas: vec![theta; planes],
        turns: vec![turn; planes],
        r: 0,
        fixed_dim: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crystal::eigenvalue_type;
    use crate::krawtchouk::reflection;

    fn rot90() -> ZMatrix {
        ZMatrix::from_rows(&[vec![0, -1], vec![1, 0]]).unwrap()
    }

    #[test]
    fn element_values() {
        let minus = ZMatrix::from_rows(&[vec![-1, 0], vec![0, -1]]).unwrap();
        assert_eq!(b0_p_element(&minus, 1).unwrap(), ratio(-1, 2));
        assert_eq!(b0_p_element(&ZMatrix::identity(5), 2).unwrap(), int(10));
        assert_eq!(b0_p_element(&rot90(), 0).unwrap(), ratio(1, 2));
        for d in 1..=10 {
            for k in 0..=d {
                for p in 0..=d {
                    let b = b0_p_element(&reflection(d, k), p).unwrap();
                    assert_eq!(b, ratio(krawtchouk(d, p, k), 1 << k), "d={d} k={k} p={p}");
                }
            }
        }
    }

    #[test]
    fn eigentype_values() {
        for d in 1..8 {
            for k in 0..=d {
                let et = eigenvalue_type(&reflection(d, k)).unwrap();
                let expect = (d as f64 - 2.0 * k as f64) / 2f64.powi(k as i32);
                assert!((b0_1_eigentype(&et, d) - expect).abs() < 1e-12);
            }
        }
        assert!(b0_1_eigentype(&rotation_type(1, 3, 1), 3).abs() < 1e-12);
        assert!(b0_1_eigentype(&rotation_type(1, 4, 1), 2).abs() < 1e-12);
        // order-3 isotropy: 2(d - 3s) / 3^s
        for d in 2..10usize {
            for s in 1..=d / 2 {
                let et = rotation_type(1, 3, s);
                let expect = 2.0 * (d as f64 - 3.0 * s as f64) / 3f64.powi(s as i32);
                let got = 2.0 * b0_1_eigentype(&et, d);
                assert!((got - expect).abs() < 1e-12, "d={d} s={s}");
            }
        }
    }

    #[test]
    fn codim2_examples() {
        assert_eq!(b0_1_codim2_cyclic(3, 3), int(0));
        assert_eq!(b0_1_codim2_cyclic(2, 2), ratio(-1, 2));
        assert_eq!(b0_1_codim2_cyclic(4, 2), int(0));
        assert_eq!(b0_0_codim2_cyclic(2), ratio(1, 4));
        assert_eq!(b0_0_codim2_cyclic(3), ratio(2, 3));
        assert_eq!(b0_0_codim2_cyclic(1), int(0));
    }

    #[test]
    fn codim2_direct_sums() {
        for m in 2..=30 {
            for d in 2..=8 {
                let direct: f64 = (1..m).map(|j| b0_1_eigentype(&rotation_type(j, m, 1), d)).sum();
                let closed = to_f64(&b0_1_codim2_cyclic(d, m));
                assert!((direct - closed).abs() < 1e-12 * closed.abs().max(1.0), "d={d} m={m}");
            }
            let direct0: f64 = (1..m)
                .map(|j| {
                    let x = PI * j as f64 / m as f64;
                    1.0 / (4.0 * x.sin().powi(2))
                })
                .sum();
            assert!((direct0 - to_f64(&b0_0_codim2_cyclic(m))).abs() < 1e-12 * (m * m) as f64);
        }
    }

    #[test]
    fn codim4_examples_and_sums() {
        assert_eq!(b0_1_codim4_constant_angle(4, 2), ratio(-1, 4));
        assert_eq!(b0_1_codim4_constant_angle(8, 2), int(0));
        assert_eq!(b0_1_codim4_constant_angle(4, 3), ratio(-4, 9));
        for m in 2..=30 {
            for d in 4..=8 {
                let direct: f64 = (1..m).map(|j| b0_1_eigentype(&rotation_type(j, m, 2), d)).sum();
                let closed = to_f64(&b0_1_codim4_constant_angle(d, m));
                assert!((direct - closed).abs() < 1e-12 * closed.abs().max(1.0), "d={d} m={m}");
            }
        }
    }

    #[test]
    fn exact_rotation_sums() {
        // integral rotations of orders 2, 3, 4, 6 in one or two planes
        let blocks: [(usize, Vec<Vec<i64>>); 4] = [
            (2, vec![vec![-1, 0], vec![0, -1]]),
            (3, vec![vec![-1, -1], vec![1, 0]]),
            (4, vec![vec![0, -1], vec![1, 0]]),
            (6, vec![vec![0, -1], vec![1, 1]]),
        ];
        for (m, rows) in &blocks {
            let r = ZMatrix::from_rows(rows).unwrap();
            for d in 4..=8 {
                let extra = ZMatrix::identity(d - 2);
                let g2 = r.direct_sum(&extra);
                let g4 = r.direct_sum(&r).direct_sum(&ZMatrix::identity(d - 4));
                let mut s2 = Rational::zero();
                let mut s4 = Rational::zero();
                for j in 1..*m {
                    s2 += b0_p_element(&g2.pow(j as u32), 1).unwrap();
                    s4 += b0_p_element(&g4.pow(j as u32), 1).unwrap();
                }
                assert_eq!(s2, b0_1_codim2_cyclic(d, *m), "m={m} d={d}");
                assert_eq!(s4, b0_1_codim4_constant_angle(d, *m), "m={m} d={d}");
            }
        }
    }

    #[test]
    fn trig_sum_closed_forms() {
        let (a, b, _, _) = trig_sums(2);
        assert_eq!((a, b), (int(1), int(-1)));
        let (a, b, _, _) = trig_sums(3);
        assert_eq!((a, b), (ratio(8, 3), ratio(-4, 3)));
        assert_eq!(trig_sums(4).0, int(5));
        for m in 2..=50 {
            let (a, b, c, e) = trig_sums(m);
            let (x, y, z, w) = trig_sums_direct(m);
            for (q, f) in [(a, x), (b, y), (c, z), (e, w)] {
                assert!((to_f64(&q) - f).abs() < 1e-9 * f.abs().max(1.0), "m={m}");
            }
        }
    }

    #[test]
    fn margin_identity() {
        for d in 2..=30 {
            for m in 1..=30 {
                let lhs = b0_1_codim2_cyclic(d, m) - int(d as i64 - 6) * b0_0_codim2_cyclic(m);
                let mi = m as i64;
                let rhs = if m == 1 { int(0) } else { ratio(3 * mi * mi - 6 * mi + 3, 6) };
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn curvature_factors() {
        assert_eq!(a1_factor(3, 0), ratio(1, 6));
        assert_eq!(a1_factor(6, 1), int(0));
        assert_eq!(a_coefficients(3, 0, 1.0, 0.0), (1.0, 0.0));
    }

    #[test]
    fn singular_volume() {
        let v = singular_volume_from_b(&SurdSum::rational(ratio(1, 2)), 6, 3, 0).unwrap();
        assert_eq!(v.as_rational(), Some(int(8)));
        assert_eq!(singular_volume_from_b_f64(0.5, 2, 1, 0).unwrap(), 2.0);
        assert!(matches!(
            singular_volume_from_b_f64(0.5, 6, 3, 3),
            Err(Error::KrawtchoukZero { .. })
        ));
        assert!(matches!(
            singular_volume_from_b_f64(0.5, 8, 4, 1),
            Err(Error::KrawtchoukZero { .. })
        ));
    }

    #[test]
    fn surds() {
        let mut s = SurdSum::term(int(1), &int(8));
        assert_eq!(s.terms().collect::<Vec<_>>(), vec![(&int(2), &BigInt::from(2))]);
        s.add_term(int(-2), &int(2));
        assert!(s.is_zero());
        assert!(s.value().is_sign_positive());
        let q = SurdSum::term(int(3), &ratio(1, 4));
        assert_eq!(q.as_rational(), Some(ratio(3, 2)));
        let h = SurdSum::term(int(1), &ratio(1, 2));
        assert!((h.value() - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(h.to_string(), "1/2*sqrt(2)");
    }
}
