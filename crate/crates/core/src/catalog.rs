//! Worked examples: tori, reflection quotients `O_k` and their free
//! counterparts `M_k`, the triangular-lattice pair and the pillow/square
//! pair, each with the facts it is expected to satisfy.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::crystal::{build_group, AffineElement, CrystalGroup, DEFAULT_ORDER_CAP};
use crate::krawtchouk::{integer_zeros, krawtchouk, reflection};
use crate::lattice::{enumerate_shells, LatticeGram};
use crate::linalg::rational::{format_rational, int, ratio};
use crate::linalg::{QMatrix, Rational, ZMatrix};
use crate::spectrum::{isospectral_compare, spectrum_tables_from_shells, Comparison, SpectrumTable};
use crate::strata::{strata, Stratum};
use crate::{Error, Result};

/// A checkable statement about a catalog group.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Claim {
    /// Equal `p`-spectra with `other` up to `bound`, for every listed `p`.
    Isospectral {
        other: String,
        ps: Vec<usize>,
        #[serde(with = "crate::linalg::rational::serde_string")]
        bound: Rational,
    },
    /// The `p`-spectra differ up to `bound`; when `at` is given, the first
    /// difference is at that `mu2` with those multiplicities (self, other).
    SpectraDiffer {
        other: String,
        p: usize,
        #[serde(with = "crate::linalg::rational::serde_string")]
        bound: Rational,
        at: Option<(String, u64, u64)>,
    },
    /// Exactly `count` strata, all of codimension `codim` with isotropy of
    /// order `isotropy_order` and squared volume `volume2`.
    UniformStrata {
        count: usize,
        codim: usize,
        isotropy_order: usize,
        #[serde(with = "crate::linalg::rational::serde_string")]
        volume2: Rational,
    },
    /// Only isolated singular points, with these isotropy orders.
    ConePoints { orders: Vec<usize> },
    /// Some stratum has this codimension.
    HasCodim { codim: usize },
    NoStrata,
}

impl Claim {
    pub fn describe(&self) -> String {
        match self {
            Claim::Isospectral { other, ps, bound } => {
                format!("p-isospectral to {other} for p in {ps:?} up to mu2 <= {}", format_rational(bound))
            }
            Claim::SpectraDiffer { other, p, bound, at } => match at {
                Some((mu2, a, b)) => format!("{p}-spectrum differs from {other} first at mu2 = {mu2} ({a} vs {b})"),
                None => format!("{p}-spectrum differs from {other} up to mu2 <= {}", format_rational(bound)),
            },
            Claim::UniformStrata {
                count,
                codim,
                isotropy_order,
                volume2,
            } => format!(
                "{count} strata of codimension {codim}, isotropy order {isotropy_order}, volume^2 {}",
                format_rational(volume2)
            ),
            Claim::ConePoints { orders } => format!("cone points of orders {orders:?}"),
            Claim::HasCodim { codim } => format!("has a stratum of codimension {codim}"),
            Claim::NoStrata => "no singular strata".to_string(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: String,
    pub group: CrystalGroup,
    pub claims: Vec<Claim>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClaimResult {
    pub entry: String,
    pub claim: String,
    pub passed: bool,
    pub detail: String,
}

fn lattice_from(rows: &[&[(i64, i64)]]) -> LatticeGram {
    let q = rows
        .iter()
        .map(|r| r.iter().map(|&(n, d)| ratio(n, d)).collect())
        .collect();
    LatticeGram::new(QMatrix::from_rows(q).expect("rectangular")).expect("positive definite")
}

fn matrix(rows: &[&[i64]]) -> ZMatrix {
    ZMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).expect("rectangular")
}

fn group(lattice: LatticeGram, gens: Vec<AffineElement>) -> CrystalGroup {
    build_group(lattice, gens, DEFAULT_ORDER_CAP).expect("catalog groups are valid")
}

pub fn make_torus(d: usize) -> CatalogEntry {
    CatalogEntry {
        name: format!("torus-d{d}"),
        group: CrystalGroup::torus(LatticeGram::standard(d)),
        claims: vec![Claim::NoStrata],
    }
}

/// `O_k = Z^d + <gamma_k>` and `M_k = Z^d + <gamma_k + e_d / 2>`, where
/// `gamma_k` negates the first `k` coordinates. They are `p`-isospectral
/// exactly when `K_p^d(k) = 0`; the returned warning says when the
/// requested `p` is not such a degree.
pub fn make_ok_mk(d: usize, k: usize, p: usize) -> Result<(CatalogEntry, CatalogEntry, Option<String>)> {
    if k == 0 || k >= d {
        return Err(Error::InvalidCodim { d, k });
    }
    if p > d {
        return Err(Error::InvalidDegree { d, p });
    }
    let warning = (krawtchouk(d, p, k) != 0).then(|| {
        format!(
            "K_{p}^{d}({k}) = {} is nonzero, so O{k}-d{d} and M{k}-d{d} are not {p}-isospectral",
            krawtchouk(d, p, k)
        )
    });
    let (o, m) = ok_mk_entries(d, k);
    Ok((o, m, warning))
}

fn ok_mk_entries(d: usize, k: usize) -> (CatalogEntry, CatalogEntry) {
    let gamma = reflection(d, k);
    let mut a = vec![int(0); d];
    a[d - 1] = ratio(1, 2);
    let o_name = format!("O{k}-d{d}");
    let m_name = format!("M{k}-d{d}");
    let ps: Vec<usize> = (0..=d).filter(|&p| krawtchouk(d, p, k) == 0).collect();
    let bound = int(4);
    let mut o_claims = vec![Claim::UniformStrata {
        count: 1 << k,
        codim: k,
        isotropy_order: 2,
        volume2: int(1),
    }];
    if !ps.is_empty() {
        o_claims.push(Claim::Isospectral {
            other: m_name.clone(),
            ps: ps.clone(),
            bound: bound.clone(),
        });
    }
    o_claims.push(Claim::SpectraDiffer {
        other: m_name.clone(),
        p: 0,
        bound,
        at: None,
    });
    let o = CatalogEntry {
        name: o_name,
        group: group(LatticeGram::standard(d), vec![AffineElement::linear(gamma.clone())]),
        claims: o_claims,
    };
    let m = CatalogEntry {
        name: m_name,
        group: group(LatticeGram::standard(d), vec![AffineElement::new(gamma, a)]),
        claims: vec![Claim::NoStrata],
    };
    (o, m)
}

/// The 3-dimensional pair over the hexagonal-times-interval lattice: the
/// rotation by `2 pi / 3` with no translation (an orbifold) and with
/// translation `1/3` along the axis (a manifold).
pub fn make_triangular_pair() -> (CatalogEntry, CatalogEntry) {
    let lattice = lattice_from(&[
        &[(1, 1), (1, 2), (0, 1)],
        &[(1, 2), (1, 1), (0, 1)],
        &[(0, 1), (0, 1), (1, 1)],
    ]);
    let rot = matrix(&[&[-1, -1, 0], &[1, 0, 0], &[0, 0, 1]]);
    let orbifold = CatalogEntry {
        name: "triangular-orbifold".into(),
        group: group(lattice.clone(), vec![AffineElement::linear(rot.clone())]),
        claims: vec![
            Claim::Isospectral {
                other: "triangular-manifold".into(),
                ps: vec![1],
                bound: int(4),
            },
            Claim::SpectraDiffer {
                other: "triangular-manifold".into(),
                p: 0,
                bound: int(2),
                at: None,
            },
            Claim::UniformStrata {
                count: 3,
                codim: 2,
                isotropy_order: 3,
                volume2: int(1),
            },
        ],
    };
    let manifold = CatalogEntry {
        name: "triangular-manifold".into(),
        group: group(
            lattice,
            vec![AffineElement::new(rot, vec![int(0), int(0), ratio(1, 3)])],
        ),
        claims: vec![Claim::NoStrata],
    };
    (orbifold, manifold)
}

/// `Z^2` extended by the quarter turn (a pillow with cone points of orders
/// 4, 4, 2) and by the two coordinate reflections (a square).
pub fn make_pillow_and_square() -> (CatalogEntry, CatalogEntry) {
    let rot = matrix(&[&[0, -1], &[1, 0]]);
    let pillow = CatalogEntry {
        name: "pillow".into(),
        group: group(LatticeGram::standard(2), vec![AffineElement::linear(rot)]),
        claims: vec![
            Claim::Isospectral {
                other: "square".into(),
                ps: vec![1],
                bound: int(4),
            },
            Claim::SpectraDiffer {
                other: "square".into(),
                p: 0,
                bound: int(1),
                at: Some(("1".into(), 1, 2)),
            },
            Claim::ConePoints { orders: vec![2, 4, 4] },
        ],
    };
    let square = CatalogEntry {
        name: "square".into(),
        group: group(
            LatticeGram::standard(2),
            vec![
                AffineElement::linear(reflection(2, 1)),
                AffineElement::linear(matrix(&[&[1, 0], &[0, -1]])),
            ],
        ),
        claims: vec![Claim::HasCodim { codim: 1 }],
    };
    (pillow, square)
}

/// The mutually `p`-isospectral family `{O_k, M_k, O_k', M_k'}` when
/// `K_p^d(k) = K_p^d(k') = 0`.
fn four_way_family(d: usize, p: usize, bound: Rational) -> Vec<CatalogEntry> {
    let zeros: Vec<usize> = integer_zeros(d, p).into_iter().filter(|&k| k >= 1 && k < d).collect();
    let mut entries: Vec<CatalogEntry> = Vec::new();
    for &k in &zeros {
        let (mut o, m) = ok_mk_entries(d, k);
        // spectra at d >= 9 are compared at a smaller bound
        for c in &mut o.claims {
            if let Claim::Isospectral { bound: b, .. } | Claim::SpectraDiffer { bound: b, .. } = c {
                *b = bound.clone();
            }
        }
        entries.push(o);
        entries.push(m);
    }
    let names: Vec<String> = entries.iter().map(|e| e.name.clone()).collect();
    if let Some(first) = entries.first_mut() {
        for other in names.iter().skip(1) {
            first.claims.push(Claim::Isospectral {
                other: other.clone(),
                ps: vec![p],
                bound: bound.clone(),
            });
        }
    }
    entries
}

/// Every named entry, in listing order.
pub fn catalog() -> Vec<CatalogEntry> {
    let mut out: Vec<CatalogEntry> = (1..=3).map(make_torus).collect();
    for (d, k) in [(2, 1), (4, 2), (6, 3)] {
        let (o, m) = ok_mk_entries(d, k);
        out.push(o);
        out.push(m);
    }
    out.extend(four_way_family(9, 2, int(2)));
    let (a, b) = make_triangular_pair();
    out.push(a);
    out.push(b);
    let (a, b) = make_pillow_and_square();
    out.push(a);
    out.push(b);
    out
}

pub fn catalog_names() -> Vec<String> {
    catalog().into_iter().map(|e| e.name).collect()
}

fn parse_ok_name(name: &str) -> Option<(char, usize, usize)> {
    let kind = name.chars().next()?;
    if kind != 'O' && kind != 'M' {
        return None;
    }
    let (k, d) = name[1..].split_once("-d")?;
    Some((kind, k.parse().ok()?, d.parse().ok()?))
}

/// A named entry, or a generic `O{k}-d{d}` / `M{k}-d{d}` / `torus-d{d}`.
pub fn catalog_entry(name: &str) -> Result<CatalogEntry> {
    let unknown = || Error::UnknownCatalogEntry(name.to_string());
    if let Some(e) = catalog().into_iter().find(|e| e.name == name) {
        return Ok(e);
    }
    if let Some(d) = name.strip_prefix("torus-d") {
        let d: usize = d.parse().map_err(|_| unknown())?;
        if d == 0 {
            return Err(unknown());
        }
        return Ok(make_torus(d));
    }
    let (kind, k, d) = parse_ok_name(name).ok_or_else(unknown)?;
    let (o, m, _) = make_ok_mk(d, k, 0)?;
    Ok(if kind == 'O' { o } else { m })
}

fn check_strata(claim: &Claim, st: &[Stratum]) -> (bool, String) {
    let summary = || {
        let v: Vec<String> = st
            .iter()
            .map(|s| format!("(codim {}, order {}, vol2 {})", s.codim, s.isotropy_order(), format_rational(&s.volume2)))
            .collect();
        format!("{} strata: {}", st.len(), v.join(" "))
    };
    let ok = match claim {
        Claim::UniformStrata {
            count,
            codim,
            isotropy_order,
            volume2,
        } => {
            st.len() == *count
                && st
                    .iter()
                    .all(|s| s.codim == *codim && s.isotropy_order() == *isotropy_order && &s.volume2 == volume2)
        }
        Claim::ConePoints { orders } => {
            let mut got: Vec<usize> = st.iter().map(|s| s.isotropy_order()).collect();
            got.sort_unstable();
            st.iter().all(|s| s.dim == 0) && &got == orders
        }
        Claim::HasCodim { codim } => st.iter().any(|s| s.codim == *codim),
        Claim::NoStrata => st.is_empty(),
        _ => unreachable!("not a strata claim"),
    };
    (ok, summary())
}

/// Spectrum tables for `ps`, reusing one shell enumeration per lattice.
struct TableCache {
    cap: u64,
    tables: BTreeMap<(String, usize, Rational), SpectrumTable>,
}

impl TableCache {
    fn get(&mut self, entry: &CatalogEntry, p: usize, bound: &Rational) -> Result<SpectrumTable> {
        let key = (entry.name.clone(), p, bound.clone());
        if let Some(t) = self.tables.get(&key) {
            return Ok(t.clone());
        }
        let shells = enumerate_shells(entry.group.lattice(), bound, self.cap)?;
        let d = entry.group.dim();
        let ps: Vec<usize> = (0..=d).collect();
        for t in spectrum_tables_from_shells(&entry.group, &ps, &shells)? {
            self.tables.insert((entry.name.clone(), t.p, bound.clone()), t);
        }
        Ok(self.tables[&key].clone())
    }
}

/// Checks every claim of `entry`, resolving other entries by name.
pub fn verify_entry(entry: &CatalogEntry, cap: u64) -> Result<Vec<ClaimResult>> {
    let mut cache = TableCache {
        cap,
        tables: BTreeMap::new(),
    };
    let mut st: Option<Vec<Stratum>> = None;
    let mut out = Vec::new();
    for claim in &entry.claims {
        let (passed, detail) = match claim {
            Claim::Isospectral { other, ps, bound } => {
                let other = catalog_entry(other)?;
                let mut failures = Vec::new();
                for &p in ps {
                    let a = cache.get(entry, p, bound)?;
                    let b = cache.get(&other, p, bound)?;
                    if let Comparison::FirstDifference { .. } = isospectral_compare(&a, &b)? {
                        failures.push(format!("p={p}: {}", isospectral_compare(&a, &b)?));
                    }
                }
                (failures.is_empty(), if failures.is_empty() { "equal".into() } else { failures.join("; ") })
            }
            Claim::SpectraDiffer { other, p, bound, at } => {
                let other = catalog_entry(other)?;
                let a = cache.get(entry, *p, bound)?;
                let b = cache.get(&other, *p, bound)?;
                let cmp = isospectral_compare(&a, &b)?;
                let passed = match (&cmp, at) {
                    (Comparison::Equal, _) => false,
                    (Comparison::FirstDifference { .. }, None) => true,
                    (Comparison::FirstDifference { mu2, a, b }, Some((m, ea, eb))) => {
                        &format_rational(mu2) == m && a == ea && b == eb
                    }
                };
                (passed, cmp.to_string())
            }
            _ => {
                let st = st.get_or_insert_with(|| strata(&entry.group));
                check_strata(claim, st)
            }
        };
        out.push(ClaimResult {
            entry: entry.name.clone(),
            claim: claim.describe(),
            passed,
            detail,
        });
    }
    Ok(out)
}
