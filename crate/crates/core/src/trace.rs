//! Truncated heat traces and their comparison with the flat expansion.
//!
//! The spectral side of the trace is `sum_mu m_{p,mu} exp(-4 pi^2 mu^2 t)`
//! over the dual shells. Each group element contributes, before the
//! `tr_p / |F|` weighting, the theta-like sum
//! `sum_{g^T v = v} exp(2 pi i v.a) exp(-4 pi^2 |v|^2 t)`, which equals the
//! geometric side `sum_C vol(C) (4 pi t)^{-dim C/2} / |det(I - A)|` over the
//! fixed components up to `O(exp(-c/t))`.
//!
//! Truncations carry a certified bound on what was discarded: dual vectors
//! with `|v| <= s` number at most `V_d (s + h)^d / covol(dual)` and the
//! resulting Stieltjes integral is bounded through upper incomplete gamma
//! functions.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::crystal::{det_normal_factor, tr_p, AffineElement, CrystalGroup};
use crate::heat::{assemble_expansion, AsymptoticExpansion, SurdSum};
use crate::krawtchouk::binomial;
use crate::lattice::{ball_volume, enumerate_shells, DualShellTable};
use crate::linalg::rational::{int, to_f64};
use crate::linalg::Rational;
use crate::spectrum::{character_table, spectrum_tables_from_characters, CharacterTable, DualAction};
use crate::strata::{fixed_set, strata};
use crate::{Error, Result};

/// Relative accuracy demanded of truncated traces.
pub const TRACE_TAIL_TOLERANCE: f64 = 1e-12;
/// Relative accuracy demanded of single-element spectral sides.
pub const ELEMENT_TAIL_TOLERANCE: f64 = 1e-13;
/// Agreement required between the strata and per-element expansions.
pub const ROUTE_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_T_GRID: [f64; 3] = [0.1, 0.05, 0.02];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceSample {
    pub p: usize,
    pub t: f64,
    pub value: f64,
    #[serde(with = "crate::linalg::rational::serde_string")]
    pub truncation_bound: Rational,
    pub tail_estimate: f64,
}

/// Upper bound for `Gamma(s2 / 2, x)`.
fn upper_gamma_bound(s2: usize, x: f64) -> f64 {
    let ex = (-x).exp();
    let (mut s, mut g) = if s2.is_multiple_of(2) {
        (1.0, ex)
    } else if x > 0.0 {
        // Gamma(1/2, x) <= x^{-1/2} e^{-x}
        (0.5, ex / x.sqrt())
    } else {
        (0.5, PI.sqrt())
    };
    while 2.0 * s < s2 as f64 {
        g = s * g + x.powf(s) * ex;
        s += 1.0;
    }
    g
}

/// Bound on `sum_{|v|^2 > bound} exp(-4 pi^2 |v|^2 t)` over the dual lattice.
pub fn lattice_tail_bound(group: &CrystalGroup, bound: &Rational, t: f64) -> f64 {
    let l = group.lattice();
    let d = l.dim();
    let dual = l.dual_gram();
    let h: f64 = (0..d).map(|i| to_f64(&dual[(i, i)]).sqrt()).sum::<f64>() / 2.0;
    let c = ball_volume(d) * l.covolume();
    let a = 4.0 * PI * PI * t;
    let rho2 = to_f64(bound).max(0.0);
    let x = a * rho2;
    // int_rho^inf 2 a s e^{-a s^2} c (s + h)^d ds, expanded binomially
    (0..=d)
        .map(|j| {
            binomial(d as i64, j as i64) as f64
                * h.powi((d - j) as i32)
                * c
                * a.powf(-(j as f64) / 2.0)
                * upper_gamma_bound(j + 2, x)
        })
        .sum()
}

fn next_bound(b: &Rational) -> Rational {
    let grown = (b * Rational::new(BigInt::from(5), BigInt::from(4))).ceil();
    grown + int(1)
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::NotApplicable(format!("heat time must be positive, got {t}")));
    }
    Ok(())
}

/// Shell and character storage for one group, enlarged on demand and reused
/// across degrees, times and elements.
pub struct TraceEngine<'g> {
    group: &'g CrystalGroup,
    cap: u64,
    shells: Option<DualShellTable>,
    chars: Option<CharacterTable>,
}

impl<'g> TraceEngine<'g> {
    pub fn new(group: &'g CrystalGroup, cap: u64) -> Self {
        TraceEngine {
            group,
            cap,
            shells: None,
            chars: None,
        }
    }

    /// Starts from shells already enumerated for the same lattice.
    pub fn with_shells(group: &'g CrystalGroup, cap: u64, shells: DualShellTable) -> Self {
        TraceEngine {
            group,
            cap,
            shells: Some(shells),
            chars: None,
        }
    }

    pub fn group(&self) -> &CrystalGroup {
        self.group
    }

    pub fn into_shells(self) -> Option<DualShellTable> {
        self.shells
    }

    fn ensure(&mut self, bound: &Rational) -> Result<&DualShellTable> {
        let stale = self.shells.as_ref().is_none_or(|s| s.bound() < bound);
        if stale {
            self.shells = Some(enumerate_shells(self.group.lattice(), bound, self.cap)?);
            self.chars = None;
        }
        Ok(self.shells.as_ref().expect("shells present"))
    }

    fn characters(&mut self, bound: &Rational) -> Result<&CharacterTable> {
        self.ensure(bound)?;
        if self.chars.is_none() {
            let shells = self.shells.as_ref().expect("shells present");
            self.chars = Some(character_table(self.group, shells)?);
        }
        Ok(self.chars.as_ref().expect("characters present"))
    }

    fn trace_value(&mut self, p: usize, t: f64, bound: &Rational) -> Result<f64> {
        let group = self.group;
        let chars = self.characters(bound)?;
        let table = spectrum_tables_from_characters(group, &[p], chars, bound)?.remove(0);
        Ok(table.heat_sum(t))
    }

    /// The truncated `p`-form heat trace at `t`, starting from `start` and
    /// enlarging the bound until the certified tail is below
    /// [`TRACE_TAIL_TOLERANCE`] relative to the value.
    pub fn truncated_trace(&mut self, p: usize, t: f64, start: &Rational) -> Result<TraceSample> {
        check_t(t)?;
        let d = self.group.dim();
        if p > d {
            return Err(Error::InvalidDegree { d, p });
        }
        let weight = binomial(d as i64, p as i64) as f64;
        let tail = |r: &Rational| weight * lattice_tail_bound(self.group, r, t);
        let mut r = start.clone();
        loop {
            let value = self.trace_value(p, t, &r)?;
            let tail_r = tail(&r);
            if tail_r <= TRACE_TAIL_TOLERANCE * value {
                return Ok(TraceSample {
                    p,
                    t,
                    value,
                    truncation_bound: r,
                    tail_estimate: tail_r,
                });
            }
            // value only grows with the bound, so it is a safe target
            let mut next = next_bound(&r);
            if value > 0.0 {
                while tail(&next) > TRACE_TAIL_TOLERANCE * value {
                    next = next_bound(&next);
                }
            }
            r = next;
        }
    }

    fn spectral_sum(&mut self, action: &DualAction, t: f64, bound: &Rational) -> Result<f64> {
        let shells = self.ensure(bound)?;
        let mut re = 0.0;
        let mut im = 0.0;
        for (mu2, shell) in shells.shells().range(..=bound.clone()) {
            let (cr, ci) = action.character(shell);
            let w = (-4.0 * PI * PI * to_f64(mu2) * t).exp();
            re += cr * w;
            im += ci * w;
        }
        debug_assert!(im.abs() <= 1e-9 * re.abs().max(1.0));
        Ok(re)
    }

    /// The spectral side of one element, with the bound enlarged until the
    /// tail is below [`ELEMENT_TAIL_TOLERANCE`] relative to `max(1, |value|)`.
    pub fn element_spectral_side(&mut self, element: &AffineElement, t: f64, start: &Rational) -> Result<(f64, Rational)> {
        check_t(t)?;
        let action = DualAction::new(element);
        let mut r = start.clone();
        loop {
            let value = self.spectral_sum(&action, t, &r)?;
            let target = ELEMENT_TAIL_TOLERANCE * value.abs().max(1.0);
            if lattice_tail_bound(self.group, &r, t) <= target {
                return Ok((value, r));
            }
            let mut next = next_bound(&r);
            while lattice_tail_bound(self.group, &next, t) > target {
                next = next_bound(&next);
            }
            r = next;
        }
    }

    /// Compares the truncated trace with the strata expansion over a grid of
    /// times, smallest time first so that one enumeration serves all.
    pub fn expansion_report(&mut self, p: usize, t_grid: &[f64], start: &Rational) -> Result<ExpansionReport> {
        let group = self.group;
        let st = strata(group);
        let expansion = assemble_expansion(group, &st, p)?;
        let per_element = element_expansion(group, p)?;
        let route_difference = expansion.max_difference(&per_element);
        let mut ts: Vec<f64> = t_grid.to_vec();
        ts.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
        ts.dedup();
        let mut samples = Vec::with_capacity(ts.len());
        for &t in &ts {
            let s = self.truncated_trace(p, t, start)?;
            let expansion_value = expansion.evaluate(t);
            samples.push(ResidualSample {
                t,
                value: s.value,
                tail_estimate: s.tail_estimate,
                truncation_bound: s.truncation_bound,
                expansion_value,
                residual: (s.value - expansion_value).abs(),
            });
        }
        samples.reverse();
        Ok(ExpansionReport {
            p,
            expansion,
            samples,
            route_difference,
        })
    }
}

/// Truncated `p`-form heat trace of `group` at `t`.
pub fn truncated_trace(group: &CrystalGroup, p: usize, t: f64, bound: &Rational, cap: u64) -> Result<TraceSample> {
    TraceEngine::new(group, cap).truncated_trace(p, t, bound)
}

/// `sum_{g^T v = v} exp(2 pi i v.a) exp(-4 pi^2 |v|^2 t)` for one element.
pub fn element_spectral_side(
    group: &CrystalGroup,
    element: &AffineElement,
    t: f64,
    bound: &Rational,
    cap: u64,
) -> Result<f64> {
    Ok(TraceEngine::new(group, cap).element_spectral_side(element, t, bound)?.0)
}

/// `sum_C vol(C) (4 pi t)^{-dim C / 2} / |det(I - A)|` over the fixed
/// components of `element` on the torus.
pub fn element_geometric_side(group: &CrystalGroup, element: &AffineElement, t: f64) -> Result<f64> {
    check_t(t)?;
    let factor = to_f64(&det_normal_factor(&element.g)?);
    let x = 4.0 * PI * t;
    Ok(fixed_set(group, element)
        .iter()
        .map(|c| c.volume() * x.powf(-(c.dim as f64) / 2.0))
        .sum::<f64>()
        / factor)
}

/// `|spectral side - geometric side|` for one element.
pub fn poisson_check(
    group: &CrystalGroup,
    element: &AffineElement,
    t: f64,
    bound: &Rational,
    cap: u64,
) -> Result<f64> {
    let spectral = element_spectral_side(group, element, t, bound, cap)?;
    let geometric = element_geometric_side(group, element, t)?;
    Ok((spectral - geometric).abs())
}

/// The expansion regrouped by group element:
/// `(1/|F|) sum_gamma tr_p(gamma) / |det(I - A)| sum_C vol(C) (4 pi t)^{-dim C/2}`.
pub fn element_expansion(group: &CrystalGroup, p: usize) -> Result<AsymptoticExpansion> {
    let d = group.dim();
    if p > d {
        return Err(Error::InvalidDegree { d, p });
    }
    let mut exp = AsymptoticExpansion::new(d);
    let order = int(group.order() as i64);
    for e in group.elements() {
        let tr = tr_p(&e.g, p);
        let weight = int(tr) / (det_normal_factor(&e.g)? * &order);
        for c in fixed_set(group, e) {
            exp.add(c.dim, &SurdSum::term(weight.clone(), &c.volume2));
        }
    }
    Ok(exp)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualSample {
    pub t: f64,
    pub value: f64,
    pub tail_estimate: f64,
    #[serde(with = "crate::linalg::rational::serde_string")]
    pub truncation_bound: Rational,
    pub expansion_value: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionReport {
    pub p: usize,
    pub expansion: AsymptoticExpansion,
    /// Largest time first.
    pub samples: Vec<ResidualSample>,
    /// Largest coefficient difference between the strata and per-element
    /// assemblies.
    pub route_difference: f64,
}

impl ExpansionReport {
    /// Residuals at or below this level are indistinguishable from rounding.
    fn floor(s: &ResidualSample) -> f64 {
        1e-11 * s.value.abs().max(1.0)
    }

    pub fn worst_residual(&self) -> f64 {
        self.samples.iter().map(|s| s.residual).fold(0.0, f64::max)
    }

    pub fn residual_at(&self, t: f64) -> Option<f64> {
        self.samples.iter().find(|s| s.t == t).map(|s| s.residual)
    }

    /// `residual(t1) / residual(t2)`.
    pub fn decay_ratio(&self, t1: f64, t2: f64) -> Option<f64> {
        Some(self.residual_at(t1)? / self.residual_at(t2)?)
    }

    /// Every neglected term has the form `(4 pi t)^{-j/2} exp(-c/t)` with
    /// `j <= d`, so after multiplying by `(4 pi t)^{d/2}` the residual must
    /// shrink as `t` decreases, unless already at rounding level.
    pub fn decays(&self) -> bool {
        let d = self.expansion.d as f64;
        let scaled = |s: &ResidualSample| s.residual * (4.0 * PI * s.t).powf(d / 2.0);
        self.samples.windows(2).all(|w| {
            let (big, small) = (&w[0], &w[1]);
            small.residual <= Self::floor(small) || scaled(small) < scaled(big)
        })
    }

    pub fn routes_agree(&self) -> bool {
        self.route_difference <= ROUTE_TOLERANCE
    }

    pub fn check(self) -> Result<Self> {
        if !self.routes_agree() {
            return Err(Error::ValidationFailed {
                worst_residual: self.worst_residual(),
                detail: format!("expansion routes differ by {:e}", self.route_difference),
            });
        }
        if !self.decays() {
            let residuals: Vec<String> = self
                .samples
                .iter()
                .map(|s| format!("t={}: {:e}", s.t, s.residual))
                .collect();
            return Err(Error::ValidationFailed {
                worst_residual: self.worst_residual(),
                detail: format!("residuals do not decay: {}", residuals.join(", ")),
            });
        }
        Ok(self)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "p": self.p,
            "expansion": self.expansion.to_json_value(),
            "route_difference": self.route_difference,
            "samples": self.samples,
        })
    }
}

/// Validates the strata expansion against truncated traces on `t_grid`.
pub fn validate_expansion(
    group: &CrystalGroup,
    p: usize,
    t_grid: &[f64],
    start: &Rational,
    cap: u64,
) -> Result<ExpansionReport> {
    TraceEngine::new(group, cap).expansion_report(p, t_grid, start)?.check()
}

/// A bound at which the Gaussian factor has dropped below `e^{-40}`, a
/// reasonable starting point for [`TraceEngine::truncated_trace`].
pub fn default_start_bound(t: f64) -> Rational {
    let r = (40.0 / (4.0 * PI * PI * t)).ceil();
    Rational::from_integer(BigInt::from(r.to_i64().unwrap_or(1).max(1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crystal::{build_group, DEFAULT_ORDER_CAP};
    use crate::krawtchouk::reflection;
    use crate::lattice::{LatticeGram, DEFAULT_ENUM_CAP};
    use crate::linalg::rational::ratio;
    use crate::linalg::ZMatrix;

    fn torus(d: usize) -> CrystalGroup {
        CrystalGroup::torus(LatticeGram::standard(d))
    }

    fn involution_group(d: usize, k: usize) -> CrystalGroup {
        let g = AffineElement::linear(reflection(d, k));
        build_group(LatticeGram::standard(d), vec![g], DEFAULT_ORDER_CAP).unwrap()
    }

    fn theta(t: f64) -> f64 {
        (-60..=60).map(|n: i64| (-4.0 * PI * PI * (n * n) as f64 * t).exp()).sum()
    }

    #[test]
    fn tail_bound_dominates() {
        let g = torus(2);
        let t = 0.05;
        for r in [0i64, 1, 4, 10] {
            let bound = int(r);
            let exact: f64 = (-40i64..=40)
                .flat_map(|a| (-40i64..=40).map(move |b| a * a + b * b))
                .filter(|&n| n > r)
                .map(|n| (-4.0 * PI * PI * n as f64 * t).exp())
                .sum();
            assert!(lattice_tail_bound(&g, &bound, t) >= exact, "r={r}");
        }
    }

    #[test]
    fn circle_trace() {
        let g = torus(1);
        let s = truncated_trace(&g, 0, 1.0, &int(1), DEFAULT_ENUM_CAP).unwrap();
        assert!((s.value - (1.0 + 2.0 * (-4.0 * PI * PI).exp())).abs() < 1e-15);
        assert!(s.tail_estimate < 1e-12);
        let s = truncated_trace(&g, 0, 0.05, &int(1), DEFAULT_ENUM_CAP).unwrap();
        assert!((s.value - theta(0.05)).abs() < 1e-13);
    }

    #[test]
    fn constant_forms_dominate_late() {
        let g = torus(2);
        let s = truncated_trace(&g, 1, 5.0, &int(1), DEFAULT_ENUM_CAP).unwrap();
        assert!((s.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn element_sides() {
        let g = involution_group(1, 1);
        let inv = g.elements().iter().find(|e| !e.is_identity()).unwrap().clone();
        for t in DEFAULT_T_GRID {
            let spec = element_spectral_side(&g, &inv, t, &int(1), DEFAULT_ENUM_CAP).unwrap();
            assert_eq!(spec, 1.0);
            let geo = element_geometric_side(&g, &inv, t).unwrap();
            assert!((geo - 1.0).abs() <= 1e-14);
        }
        let circle = torus(1);
        let id = AffineElement::identity(1);
        let t = 0.05;
        let spec = element_spectral_side(&circle, &id, t, &int(1), DEFAULT_ENUM_CAP).unwrap();
        let geo = element_geometric_side(&circle, &id, t).unwrap();
        assert!((geo - 1.26157).abs() < 1e-5);
        let theta_residual = 2.0 * geo * (-1.0 / (4.0 * t)).exp();
        assert!(((spec - geo) - theta_residual).abs() < 1e-6);
        let r05 = poisson_check(&circle, &id, 0.05, &int(1), DEFAULT_ENUM_CAP).unwrap();
        let r02 = poisson_check(&circle, &id, 0.02, &int(1), DEFAULT_ENUM_CAP).unwrap();
        assert!((r02 - 1.49e-5).abs() < 1e-7);
        assert!(r05 / r02 > 10.0);
        let half = AffineElement::new(ZMatrix::identity(1), vec![ratio(1, 2)]);
        let free = element_spectral_side(&circle, &half, 0.02, &int(1), DEFAULT_ENUM_CAP).unwrap();
        // alternating theta sum: (4 pi t)^{-1/2} sum_n exp(-(n + 1/2)^2 / 4t)
        let t = 0.02;
        let dual: f64 = (-20..20)
            .map(|n: i64| (-((n as f64 + 0.5).powi(2)) / (4.0 * t)).exp())
            .sum::<f64>()
            / (4.0 * PI * t).sqrt();
        assert!((free - dual).abs() < 1e-13 && (free - 0.1753).abs() < 1e-3);
        assert_eq!(element_geometric_side(&circle, &half, 0.02).unwrap(), 0.0);
    }

    #[test]
    fn reflection_components() {
        let g = involution_group(4, 2);
        let e = g.elements().iter().find(|e| !e.is_identity()).unwrap().clone();
        let t = 0.05;
        let geo = element_geometric_side(&g, &e, t).unwrap();
        assert!((geo - 1.0 / (4.0 * PI * t)).abs() < 1e-12);
    }

    #[test]
    fn routes_agree_and_residuals_decay() {
        for (d, k) in [(1, 1), (2, 1), (2, 2), (3, 2)] {
            let g = involution_group(d, k);
            for p in 0..=d {
                let rep = validate_expansion(&g, p, &DEFAULT_T_GRID, &int(1), DEFAULT_ENUM_CAP).unwrap();
                assert!(rep.route_difference <= 1e-12, "d={d} k={k} p={p}");
            }
        }
        let g = torus(2);
        let rep = validate_expansion(&g, 0, &DEFAULT_T_GRID, &int(1), DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(rep.expansion.nonzero_exponents(), vec![-2]);
        let r = rep.residual_at(0.02).unwrap();
        assert!((r - 5.9e-5).abs() < 1e-6, "{r}");
    }

    #[test]
    fn engine_reuses_shells() {
        let g = torus(2);
        let mut eng = TraceEngine::new(&g, DEFAULT_ENUM_CAP);
        let a = eng.truncated_trace(0, 0.02, &int(1)).unwrap();
        let b = eng.truncated_trace(0, 0.02, &int(1)).unwrap();
        assert_eq!(a, b);
        let fresh = truncated_trace(&g, 0, 0.02, &int(1), DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(a, fresh);
        assert!(eng.into_shells().unwrap().bound() >= &a.truncation_bound);
    }

    #[test]
    fn bad_time() {
        let g = torus(1);
        assert!(truncated_trace(&g, 0, 0.0, &int(1), DEFAULT_ENUM_CAP).is_err());
        assert!(matches!(
            truncated_trace(&g, 2, 0.1, &int(1), DEFAULT_ENUM_CAP),
            Err(Error::InvalidDegree { .. })
        ));
    }
}
