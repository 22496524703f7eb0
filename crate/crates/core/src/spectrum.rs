//! Hodge `p`-spectra of flat orbifolds.
//!
//! The eigenvalue `4 pi^2 mu^2` occurs on `p`-forms with multiplicity
//! `(1/|F|) sum_gamma tr_p(g) e_mu(gamma)`, where the character
//! `e_mu(gamma)` sums `exp(2 pi i v.a)` over the dual vectors of norm `mu`
//! fixed by `v -> g^T v`. Tables are keyed by the exact `mu^2`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::crystal::{tr_p, AffineElement, CrystalGroup};
use crate::error::{Error, Result};
use crate::lattice::{enumerate_shells, DualShellTable};
use crate::linalg::rational::{common_denominator, format_rational};
use crate::linalg::Rational;

pub const IMAGINARY_TOLERANCE: f64 = 1e-9;
pub const INTEGRALITY_TOLERANCE: f64 = 1e-6;

/// An element prepared for fast evaluation on integer dual vectors.
#[derive(Clone, Debug)]
pub struct DualAction {
    d: usize,
    gt: Vec<i64>,
    is_linear_identity: bool,
    // a = numerators / den
    numerators: Vec<i64>,
    den: i64,
}

impl DualAction {
    pub fn new(e: &AffineElement) -> Self {
        let d = e.dim();
        let den = common_denominator(&e.a);
        let numerators = e
            .a
            .iter()
            .map(|x| (x * Rational::from_integer(den.clone())).to_integer().to_i64().expect("small translation"))
            .collect();
        let mut gt = vec![0i64; d * d];
        for i in 0..d {
            for j in 0..d {
                gt[i * d + j] = e.g[(j, i)].to_i64().expect("small matrix entries");
            }
        }
        DualAction {
            d,
            gt,
            is_linear_identity: e.g.is_identity(),
            numerators,
            den: den.to_i64().expect("small denominator"),
        }
    }

    /// `g^T v == v`
    pub fn fixes(&self, v: &[i64]) -> bool {
        if self.is_linear_identity {
            return true;
        }
        (0..self.d).all(|i| {
            let row = &self.gt[i * self.d..(i + 1) * self.d];
            row.iter().zip(v).map(|(a, b)| a * b).sum::<i64>() == v[i]
        })
    }

    /// `v.a` as an integer number of `1/den` turns, reduced into `[0, den)`.
    pub fn phase_steps(&self, v: &[i64]) -> i64 {
        let s: i64 = self.numerators.iter().zip(v).map(|(a, b)| a * b).sum();
        s.rem_euclid(self.den)
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    /// `sum exp(2 pi i v.a)` over the fixed vectors of a shell, as (re, im).
    pub fn character(&self, shell: &[Vec<i64>]) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for v in shell {
            if !self.fixes(v) {
                continue;
            }
            let k = self.phase_steps(v);
            if k == 0 {
                re += 1.0;
            } else {
                let angle = 2.0 * PI * k as f64 / self.den as f64;
                re += angle.cos();
                im += angle.sin();
            }
        }
        (re, im)
    }
}

/// `e_mu(gamma)` for one shell; the imaginary part must cancel.
pub fn fourier_character(
    element: &AffineElement,
    mu2: &Rational,
    shells: &DualShellTable,
) -> Result<(f64, f64)> {
    let shell = shells.get(mu2).unwrap_or(&[]);
    let (re, im) = DualAction::new(element).character(shell);
    if im.abs() > IMAGINARY_TOLERANCE {
        return Err(Error::ToleranceViolation {
            what: format!("imaginary part of the character at mu2 = {mu2}"),
            deviation: im.abs(),
            tolerance: IMAGINARY_TOLERANCE,
        });
    }
    Ok((re, im))
}

/// Real characters of every group element on every shell, in key order.
#[derive(Clone, Debug)]
pub struct CharacterTable {
    pub keys: Vec<Rational>,
    /// `values[shell][element]`
    pub values: Vec<Vec<f64>>,
}

pub fn character_table(group: &CrystalGroup, shells: &DualShellTable) -> Result<CharacterTable> {
    let actions: Vec<DualAction> = group.elements().iter().map(DualAction::new).collect();
    let entries: Vec<(&Rational, &Vec<Vec<i64>>)> = shells.shells().iter().collect();
    let values = entries
        .par_iter()
        .map(|(mu2, shell)| {
            actions
                .iter()
                .map(|act| {
                    let (re, im) = act.character(shell);
                    if im.abs() > IMAGINARY_TOLERANCE {
                        return Err(Error::ToleranceViolation {
                            what: format!("imaginary part of the character at mu2 = {mu2}"),
                            deviation: im.abs(),
                            tolerance: IMAGINARY_TOLERANCE,
                        });
                    }
                    Ok(re)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CharacterTable {
        keys: entries.into_iter().map(|(k, _)| k.clone()).collect(),
        values,
    })
}

/// Rounds a multiplicity formula value, enforcing the integrality gate.
pub fn round_multiplicity(value: f64, mu2: &Rational) -> Result<u64> {
    let rounded = value.round();
    let deviation = (value - rounded).abs();
    if deviation >= INTEGRALITY_TOLERANCE || rounded < 0.0 {
        return Err(Error::ToleranceViolation {
            what: format!("multiplicity at mu2 = {mu2} is {value}, not a nonnegative integer"),
            deviation: deviation.max(-rounded),
            tolerance: INTEGRALITY_TOLERANCE,
        });
    }
    Ok(rounded as u64)
}

fn weighted(traces: &[i64], chars: &[f64], order: usize) -> f64 {
    let sum: f64 = traces.iter().zip(chars).map(|(&t, &c)| t as f64 * c).sum();
    sum / order as f64
}

pub fn traces(group: &CrystalGroup, p: usize) -> Result<Vec<i64>> {
    let d = group.dim();
    if p > d {
        return Err(Error::InvalidDegree { d, p });
    }
    Ok(group.elements().iter().map(|e| tr_p(&e.g, p)).collect())
}

/// `m_{p, mu}` for one shell.
pub fn multiplicity(
    group: &CrystalGroup,
    p: usize,
    mu2: &Rational,
    shells: &DualShellTable,
) -> Result<u64> {
    let tr = traces(group, p)?;
    let chars = group
        .elements()
        .iter()
        .map(|e| fourier_character(e, mu2, shells).map(|c| c.0))
        .collect::<Result<Vec<_>>>()?;
    round_multiplicity(weighted(&tr, &chars, group.order()), mu2)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectrumTable {
    pub p: usize,
    pub bound: Rational,
    /// Nonzero multiplicities only.
    pub entries: BTreeMap<Rational, u64>,
}

#[derive(Serialize)]
struct EntryJson {
    mu2: String,
    multiplicity: u64,
}

#[derive(Serialize)]
struct TableJson {
    p: usize,
    bound: String,
    entries: Vec<EntryJson>,
}

impl SpectrumTable {
    /// Multiplicity of `mu2`, zero when absent.
    pub fn get(&self, mu2: &Rational) -> u64 {
        self.entries.get(mu2).copied().unwrap_or(0)
    }

    /// The Laplace eigenvalue `4 pi^2 mu^2` belonging to a key.
    pub fn eigenvalue(mu2: &Rational) -> f64 {
        4.0 * PI * PI * crate::linalg::rational::to_f64(mu2)
    }

    pub fn to_json(&self) -> String {
        let t = TableJson {
            p: self.p,
            bound: format_rational(&self.bound),
            entries: self
                .entries
                .iter()
                .map(|(k, &m)| EntryJson {
                    mu2: format_rational(k),
                    multiplicity: m,
                })
                .collect(),
        };
        serde_json::to_string(&t).expect("table serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("mu2,multiplicity\n");
        for (k, m) in &self.entries {
            out.push_str(&format!("{},{}\n", format_rational(k), m));
        }
        out
    }
}

/// Tables for several degrees from one character computation.
pub fn spectrum_tables_from_shells(
    group: &CrystalGroup,
    ps: &[usize],
    shells: &DualShellTable,
) -> Result<Vec<SpectrumTable>> {
    let chars = character_table(group, shells)?;
    spectrum_tables_from_characters(group, ps, &chars, shells.bound())
}

/// Tables for several degrees from a precomputed character table, keeping
/// the shells up to `bound`.
pub fn spectrum_tables_from_characters(
    group: &CrystalGroup,
    ps: &[usize],
    chars: &CharacterTable,
    bound: &Rational,
) -> Result<Vec<SpectrumTable>> {
    ps.iter()
        .map(|&p| {
            let tr = traces(group, p)?;
            let mut entries = BTreeMap::new();
            for (mu2, row) in chars.keys.iter().zip(&chars.values).take_while(|(k, _)| *k <= bound) {
                let m = round_multiplicity(weighted(&tr, row, group.order()), mu2)?;
                if m > 0 {
                    entries.insert(mu2.clone(), m);
                }
            }
            Ok(SpectrumTable {
                p,
                bound: bound.clone(),
                entries,
            })
        })
        .collect()
}

pub fn spectrum_table(
    group: &CrystalGroup,
    p: usize,
    bound: &Rational,
    cap: u64,
) -> Result<SpectrumTable> {
    let d = group.dim();
    if p > d {
        return Err(Error::InvalidDegree { d, p });
    }
    let shells = enumerate_shells(group.lattice(), bound, cap)?;
    Ok(spectrum_tables_from_shells(group, &[p], &shells)?.remove(0))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Comparison {
    Equal,
    FirstDifference { mu2: Rational, a: u64, b: u64 },
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Comparison::Equal => write!(f, "equal"),
            Comparison::FirstDifference { mu2, a, b } => {
                write!(f, "first_difference at mu2 = {mu2}: {a} vs {b}")
            }
        }
    }
}

/// Exact comparison; reports the smallest `mu2` where the tables differ.
pub fn isospectral_compare(a: &SpectrumTable, b: &SpectrumTable) -> Result<Comparison> {
    if a.p != b.p {
        return Err(Error::DegreeMismatch(a.p, b.p));
    }
    if a.bound != b.bound {
        return Err(Error::BoundMismatch(
            format_rational(&a.bound),
            format_rational(&b.bound),
        ));
    }
    let first = a
        .entries
        .keys()
        .chain(b.entries.keys())
        .filter(|k| a.get(k) != b.get(k))
        .min()
        .cloned();
    Ok(match first {
        None => Comparison::Equal,
        Some(mu2) => Comparison::FirstDifference {
            a: a.get(&mu2),
            b: b.get(&mu2),
            mu2,
        },
    })
}

impl SpectrumTable {
    /// `sum_mu m * exp(-4 pi^2 mu^2 t)`, summed in key order.
    pub fn heat_sum(&self, t: f64) -> f64 {
        self.entries
            .iter()
            .map(|(k, &m)| m as f64 * (-Self::eigenvalue(k) * t).exp())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() || self.entries.values().all(Zero::is_zero)
    }
}
