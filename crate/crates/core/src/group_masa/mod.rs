//! Group-algebra computations for the inclusion L(Γ₀) ⊂ L(Γ).
//!
//! All asymptotic statements are replaced by finite-horizon certificates:
//! each report carries the radius or horizon it was computed at.

pub mod algebra;
pub mod kset;

use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::BTreeSet;
use thiserror::Error;

pub use algebra::GroupAlgebraElement;
pub use kset::{solution_set, KSet};

use crate::groups::{format_element, word, Element, GroupError, GroupModel, Kind, Marked};
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MasaError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("F must avoid the marked subgroup, but contains {0}")]
    FIntersectsMarked(String),
    #[error("{0} lies in the marked subgroup")]
    InMarked(String),
    #[error("{0} is not in the marked subgroup")]
    NotInMarked(String),
    #[error("{0} does not have infinite order")]
    FiniteOrder(String),
    #[error("input has a nonzero component in L(Γ₀)")]
    NotMeanZero,
    #[error("infinitely many k contribute for the pair ({g}, {h}); the sum is not finite")]
    Divergent { g: String, h: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub fn conditional_expectation<S: Scalar>(
    model: &GroupModel,
    x: &GroupAlgebraElement<S>,
) -> Result<GroupAlgebraElement<S>, MasaError> {
    Ok(x.conditional_expectation(model)?)
}

/// 𝔼_A(x·u_{v^k}·y*).
pub fn expectation_of_twisted<S: Scalar>(
    model: &GroupModel,
    x: &GroupAlgebraElement<S>,
    vk: &Element,
    y: &GroupAlgebraElement<S>,
) -> Result<GroupAlgebraElement<S>, MasaError> {
    let inner = x
        .mul(model, &GroupAlgebraElement::unitary(vk.clone()))?
        .mul(model, &y.adjoint(model)?)?;
    Ok(inner.conditional_expectation(model)?)
}

fn require_generator(model: &GroupModel, v: &Element) -> Result<(), MasaError> {
    let c = model
        .marked_coords(v)?
        .ok_or_else(|| MasaError::NotInMarked(format_element(v)))?;
    if c.free.iter().all(|&x| x == 0) {
        return Err(MasaError::FiniteOrder(format_element(v)));
    }
    Ok(())
}

fn require_mean_zero<S: Scalar>(model: &GroupModel, x: &GroupAlgebraElement<S>) -> Result<(), MasaError> {
    if x.conditional_expectation(model)?.is_zero() {
        Ok(())
    } else {
        Err(MasaError::NotMeanZero)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StVerdict {
    /// Every g·g₀·h ∉ Γ₀ for g₀ in the searched Γ₀-ball outside E ∪ {e}.
    HoldsWithE(Vec<Element>),
    /// Witnesses reach the boundary of the search ball.
    Violation,
    /// More than the allowed number of exceptions, none on the boundary.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StReport {
    pub radius: usize,
    pub f: Vec<Element>,
    pub verdict: StVerdict,
    /// Triples (g, g₀, h) with g·g₀·h ∈ Γ₀.
    pub witnesses: Vec<(Element, Element, Element)>,
}

/// Searches g₀ ∈ Γ₀ ∖ {e} of Γ₀-word length ≤ R for g·g₀·h ∈ Γ₀ with g, h ∈ F.
pub fn st_condition(
    model: &GroupModel,
    f: &[Element],
    radius: usize,
    e_bound: usize,
    budget: usize,
) -> Result<StReport, MasaError> {
    for g in f {
        if model.in_marked(g)? {
            return Err(MasaError::FIntersectsMarked(format_element(g)));
        }
    }
    let layers = model.marked_ball_layers(radius, budget)?;
    let candidates: Vec<(usize, &Element)> = layers
        .iter()
        .enumerate()
        .skip(1)
        .flat_map(|(r, l)| l.iter().map(move |g0| (r, g0)))
        .collect();
    let found: Vec<(usize, Vec<(Element, Element, Element)>)> = candidates
        .par_iter()
        .map(|&(r, g0)| -> Result<_, MasaError> {
            let mut w = Vec::new();
            for g in f {
                let gg0 = model.multiply(g, g0)?;
                for h in f {
                    if model.in_marked(&model.multiply(&gg0, h)?)? {
                        w.push((g.clone(), g0.clone(), h.clone()));
                    }
                }
            }
            Ok((r, w))
        })
        .collect::<Result<_, _>>()?;
    let on_boundary = layers.len() == radius + 1
        && found.iter().any(|(r, w)| *r == radius && !w.is_empty());
    let exceptions: Vec<Element> = found
        .iter()
        .filter(|(_, w)| !w.is_empty())
        .map(|(_, w)| w[0].1.clone())
        .collect();
    let witnesses: Vec<_> = found.into_iter().flat_map(|(_, w)| w).collect();
    let verdict = if on_boundary {
        StVerdict::Violation
    } else if exceptions.len() > e_bound {
        StVerdict::Inconclusive
    } else {
        StVerdict::HoldsWithE(exceptions)
    };
    Ok(StReport {
        radius,
        f: f.to_vec(),
        verdict,
        witnesses,
    })
}

/// Structure of K_g = {(h₁,h₂) ∈ Γ₀×Γ₀ : h₁·g·h₂ = g}.
#[derive(Debug, Clone, PartialEq)]
pub enum KgStructure {
    Trivial,
    /// All elements of a finite K_g, identity pair included.
    Finite(Vec<(Element, Element)>),
    Infinite,
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KgReport {
    pub g: Element,
    pub structure: KgStructure,
    /// True when the structure comes from an exact argument rather than the search.
    pub exact: bool,
    pub radius: usize,
    /// Nontrivial pairs found with h₁ in the Γ₀-ball of the given radius.
    pub found: Vec<(Element, Element)>,
}

pub fn stabilizer_kg(model: &GroupModel, g: &Element, radius: usize, budget: usize) -> Result<KgReport, MasaError> {
    if model.in_marked(g)? {
        return Err(MasaError::InMarked(format_element(g)));
    }
    let ginv = model.invert(g)?;
    let mut found = Vec::new();
    for h1 in model.marked_ball(radius, budget)?.into_iter().skip(1) {
        let h2 = model.product([&ginv, &model.invert(&h1)?, g])?;
        if model.in_marked(&h2)? {
            found.push((h1, h2));
        }
    }
    let exact = kg_exact(model, g, budget)?;
    let (structure, is_exact) = match exact {
        Some(KgStructure::Finite(list)) if list.len() == 1 => (KgStructure::Trivial, true),
        Some(s) => (s, true),
        None => (KgStructure::Unknown, false),
    };
    Ok(KgReport {
        g: g.clone(),
        structure,
        exact: is_exact,
        radius,
        found,
    })
}

/// All of Γ₀ when it is finite.
fn enumerate_finite_marked(model: &GroupModel, budget: usize) -> Result<Vec<Element>, MasaError> {
    let shape = model.marked_shape();
    let order: u64 = shape.torsion.iter().product();
    let radius = shape.torsion.iter().sum::<u64>() as usize + 1;
    let mut all = model.marked_ball(radius, budget)?;
    all.sort();
    debug_assert!(all.len() as u64 <= order.max(1));
    Ok(all)
}

/// Exact K_g (g may lie in Γ₀ here, which is needed for product components).
fn kg_exact(model: &GroupModel, g: &Element, budget: usize) -> Result<Option<KgStructure>, MasaError> {
    let commuting = |model: &GroupModel| -> Result<Option<KgStructure>, MasaError> {
        // K_g ≅ Γ₀ via h ↦ (h, g⁻¹h⁻¹g) when g commutes with Γ₀
        if !model.marked_shape().is_finite() {
            return Ok(Some(KgStructure::Infinite));
        }
        let ginv = model.invert(g)?;
        let pairs = enumerate_finite_marked(model, budget)?
            .into_iter()
            .map(|h| {
                let h2 = model.product([&ginv, &model.invert(&h)?, g])?;
                Ok((h, h2))
            })
            .collect::<Result<Vec<_>, MasaError>>()?;
        Ok(Some(KgStructure::Finite(pairs)))
    };
    let id = model.identity();
    match (model.kind(), model.marked()) {
        (_, Marked::Trivial) => Ok(Some(KgStructure::Finite(vec![(id.clone(), id)]))),
        (Kind::Abelian { .. }, _) | (Kind::Free { .. }, Marked::Whole) => commuting(model),
        (Kind::Free { .. }, Marked::FreeCyclic { conj, root, .. }) => {
            let Element::Word(w) = g else {
                return Err(GroupError::MixedModel.into());
            };
            let inner = word::multiply(&word::multiply(&word::invert(conj), w), conj);
            if word::exponent_in(&inner, root).is_some() {
                Ok(Some(KgStructure::Infinite))
            } else {
                Ok(Some(KgStructure::Finite(vec![(id.clone(), id)])))
            }
        }
        (Kind::Semidirect { .. }, Marked::ActingZ) => {
            let Element::Semidirect(v, _) = g else {
                return Err(GroupError::MixedModel.into());
            };
            if kset::orbit_period(model, v)?.is_some() {
                Ok(Some(KgStructure::Infinite))
            } else {
                Ok(Some(KgStructure::Finite(vec![(id.clone(), id)])))
            }
        }
        (Kind::Semidirect { .. }, Marked::Normal) => Ok(Some(KgStructure::Infinite)),
        (Kind::DirectProduct(factors), Marked::Product) => {
            let Element::Tuple(parts) = g else {
                return Err(GroupError::MixedModel.into());
            };
            let mut lists: Vec<Vec<(Element, Element)>> = Vec::new();
            for (m, p) in factors.iter().zip(parts) {
                match kg_exact(m, p, budget)? {
                    None | Some(KgStructure::Unknown) => return Ok(None),
                    Some(KgStructure::Infinite) => return Ok(Some(KgStructure::Infinite)),
                    Some(KgStructure::Trivial) => lists.push(vec![(m.identity(), m.identity())]),
                    Some(KgStructure::Finite(l)) => lists.push(l),
                }
            }
            let mut combos: Vec<(Vec<Element>, Vec<Element>)> = vec![(vec![], vec![])];
            for l in lists {
                combos = combos
                    .into_iter()
                    .flat_map(|(a, b)| {
                        l.iter().map(move |(x, y)| {
                            let (mut a, mut b) = (a.clone(), b.clone());
                            a.push(x.clone());
                            b.push(y.clone());
                            (a, b)
                        })
                    })
                    .collect();
            }
            Ok(Some(KgStructure::Finite(
                combos
                    .into_iter()
                    .map(|(a, b)| (Element::Tuple(a), Element::Tuple(b)))
                    .collect(),
            )))
        }
        (Kind::FreeProduct(factors), Marked::Factor(i)) => {
            let Element::FreeProd(s) = g else {
                return Err(GroupError::MixedModel.into());
            };
            let embed = |e: Element| -> Result<Element, MasaError> {
                Ok(if factors[*i].is_identity(&e)? {
                    Element::FreeProd(vec![])
                } else {
                    Element::FreeProd(vec![(*i, e)])
                })
            };
            let inner = match s.as_slice() {
                [] => factors[*i].identity(),
                [(j, e)] if j == i => e.clone(),
                _ => return Ok(None),
            };
            match kg_exact(&factors[*i], &inner, budget)? {
                Some(KgStructure::Finite(l)) => Ok(Some(KgStructure::Finite(
                    l.into_iter()
                        .map(|(a, b)| Ok((embed(a)?, embed(b)?)))
                        .collect::<Result<_, MasaError>>()?,
                ))),
                other => Ok(other),
            }
        }
        _ => Ok(None),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MalnormalReport {
    pub radius: usize,
    pub malnormal: bool,
    /// (g, h) with g ∉ Γ₀, h ∈ Γ₀∖{e} and g·h·g⁻¹ ∈ Γ₀.
    pub witness: Option<(Element, Element)>,
}

pub fn malnormality_check(model: &GroupModel, radius: usize, budget: usize) -> Result<MalnormalReport, MasaError> {
    let ball = model.ball(radius, budget)?;
    let marked: Vec<Element> = model.marked_ball(radius, budget)?.into_iter().skip(1).collect();
    let witness = ball
        .par_iter()
        .map(|g| -> Result<Option<(Element, Element)>, MasaError> {
            if model.in_marked(g)? {
                return Ok(None);
            }
            let ginv = model.invert(g)?;
            for h in &marked {
                if model.in_marked(&model.product([g, h, &ginv])?)? {
                    return Ok(Some((g.clone(), h.clone())));
                }
            }
            Ok(None)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .next();
    Ok(MalnormalReport {
        radius,
        malnormal: witness.is_none(),
        witness,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IccReport {
    pub radius: usize,
    pub threshold: usize,
    /// Every non-identity element of the ball has more than `threshold` conjugates by the ball.
    pub all_exceed: bool,
    pub min_class_size: usize,
    pub smallest: Option<Element>,
}

pub fn icc_check(model: &GroupModel, radius: usize, threshold: Option<usize>, budget: usize) -> Result<IccReport, MasaError> {
    let threshold = threshold.unwrap_or(2 * radius);
    let ball = model.ball(radius, budget)?;
    let sizes = ball[1..]
        .par_iter()
        .map(|g| -> Result<(usize, Element), MasaError> {
            let mut class = BTreeSet::new();
            for x in &ball {
                class.insert(model.product([x, g, &model.invert(x)?])?);
            }
            Ok((class.len(), g.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let smallest = sizes.iter().min_by_key(|(n, _)| *n).cloned();
    Ok(IccReport {
        radius,
        threshold,
        all_exceed: sizes.iter().all(|(n, _)| *n > threshold),
        min_class_size: smallest.as_ref().map_or(0, |s| s.0),
        smallest: smallest.map(|s| s.1),
    })
}

/// ‖y‖₁ for y ∈ L(Γ₀), with a flag telling whether the value is exact.
///
/// Single terms are exact. Otherwise the absolute value of the character
/// transform is integrated over the dual of the coordinate group: exactly over
/// torsion coordinates, by an equal-weight grid over the torus coordinates.
pub fn l1_norm(model: &GroupModel, y: &GroupAlgebraElement<Complex64>) -> Result<(f64, bool), MasaError> {
    if y.len() <= 1 {
        return Ok((y.terms().values().next().map_or(0.0, |c| c.norm()), true));
    }
    let shape = model.marked_shape();
    let mut pts = Vec::with_capacity(y.len());
    for (g, c) in y.terms() {
        let co = model
            .marked_coords(g)?
            .ok_or_else(|| MasaError::NotInMarked(format_element(g)))?;
        pts.push((co, *c));
    }
    let torsion_size: u64 = shape.torsion.iter().product();
    let max_free = pts
        .iter()
        .flat_map(|(c, _)| c.free.iter().map(|x| x.unsigned_abs()))
        .max()
        .unwrap_or(0);
    let mut grid = 1usize;
    if shape.free > 0 {
        grid = ((8 * (max_free + 1)) as usize).next_power_of_two().max(64);
        while grid > 4 && (grid as u64).pow(shape.free as u32) * torsion_size > 1 << 20 {
            grid /= 2;
        }
    }
    let total = (grid as u64).pow(shape.free as u32) * torsion_size;
    let sum: f64 = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut rest = idx;
            let mut theta = Vec::with_capacity(shape.free);
            for _ in 0..shape.free {
                theta.push((rest % grid as u64) as f64 / grid as f64);
                rest /= grid as u64;
            }
            let mut chi = Vec::with_capacity(shape.torsion.len());
            for &d in &shape.torsion {
                chi.push((rest % d) as f64 / d as f64);
                rest /= d;
            }
            let val: Complex64 = pts
                .iter()
                .map(|(co, c)| {
                    let phase: f64 = co.free.iter().zip(&theta).map(|(&f, t)| f as f64 * t).sum::<f64>()
                        + co.torsion.iter().zip(&chi).map(|(&t, s)| t as f64 * s).sum::<f64>();
                    c * Complex64::from_polar(1.0, std::f64::consts::TAU * phase)
                })
                .sum();
            val.norm()
        })
        .sum();
    Ok((sum / total as f64, shape.free == 0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CesaroReport {
    pub horizon: usize,
    /// (1/2N) Σ_{0<|k|≤N} ‖𝔼_A(x v^k x*)‖₂².
    pub i: f64,
    /// (1/2N) Σ_{0<|k|≤N} ‖𝔼_A(x v^k x*)‖₂.
    pub i_prime: f64,
    /// (1/2N) Σ_{0<|k|≤N} ‖𝔼_A(x v^k x*)‖₁².
    pub ii: f64,
    /// (1/2N) Σ_{0<|k|≤N} ‖𝔼_A(x v^k x*)‖₁.
    pub ii_prime: f64,
    pub all_vanish: bool,
    /// False when some ‖·‖₁ came from torus quadrature.
    pub l1_exact: bool,
}

pub const VANISH_TOL: f64 = 1e-12;

pub fn cesaro_diagnostics(
    model: &GroupModel,
    x: &GroupAlgebraElement<Complex64>,
    v: &Element,
    horizon: usize,
) -> Result<CesaroReport, MasaError> {
    require_mean_zero(model, x)?;
    require_generator(model, v)?;
    let n = horizon as i64;
    let rows = (-n..=n)
        .into_par_iter()
        .filter(|&k| k != 0)
        .map(|k| -> Result<(f64, f64, bool), MasaError> {
            let y = expectation_of_twisted(model, x, &model.power(v, k)?, x)?;
            let (l1, exact) = l1_norm(model, &y)?;
            Ok((y.norm2_sq().re, l1, exact))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let d = (2 * n).max(1) as f64;
    let i = rows.iter().map(|r| r.0).sum::<f64>() / d;
    let i_prime = rows.iter().map(|r| r.0.sqrt()).sum::<f64>() / d;
    let ii = rows.iter().map(|r| r.1 * r.1).sum::<f64>() / d;
    let ii_prime = rows.iter().map(|r| r.1).sum::<f64>() / d;
    Ok(CesaroReport {
        horizon,
        i,
        i_prime,
        ii,
        ii_prime,
        all_vanish: [i, i_prime, ii, ii_prime].iter().all(|v| v.abs() <= VANISH_TOL),
        l1_exact: rows.iter().all(|r| r.2),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum AhpResult {
    /// k₁ < … < k_L with ‖𝔼_A(x v^{k_l} x*)‖₂ < 1/l for every family member.
    Found(Vec<u64>),
    Inconclusive { found: Vec<u64>, k_max: u64 },
}

pub fn ahp_subsequence(
    model: &GroupModel,
    family: &[GroupAlgebraElement<Complex64>],
    v: &Element,
    length: usize,
    k_max: u64,
) -> Result<AhpResult, MasaError> {
    require_generator(model, v)?;
    let mut ks: Vec<u64> = Vec::with_capacity(length);
    let mut k = 0u64;
    for l in 1..=length {
        let bound = 1.0 / l as f64;
        loop {
            k += 1;
            if k > k_max {
                return Ok(AhpResult::Inconclusive { found: ks, k_max });
            }
            let vk = model.power(v, k as i64)?;
            let ok = family.iter().try_fold(true, |acc, x| -> Result<bool, MasaError> {
                Ok(acc && expectation_of_twisted(model, x, &vk, x)?.norm2() < bound)
            })?;
            if ok {
                ks.push(k);
                break;
            }
        }
    }
    Ok(AhpResult::Found(ks))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WanderingReport {
    pub horizon: usize,
    pub wandering: bool,
    pub max_defect: f64,
    pub worst_n: Option<i64>,
}

/// Checks 𝔼_A(ζ v^n ζ*) = 0 for 0 < |n| ≤ N.
///
/// Exact scalars are compared with zero exactly; floating scalars use `tol`
/// relative to ‖ζ‖₂².
pub fn wandering_test<S: Scalar>(
    model: &GroupModel,
    zeta: &GroupAlgebraElement<S>,
    v: &Element,
    horizon: usize,
    tol: f64,
) -> Result<WanderingReport, MasaError> {
    require_mean_zero(model, zeta)?;
    require_generator(model, v)?;
    let n = horizon as i64;
    let scale = zeta.norm2().powi(2).max(1.0);
    let defects = (-n..=n)
        .into_par_iter()
        .filter(|&k| k != 0)
        .map(|k| -> Result<(i64, f64, bool), MasaError> {
            let y = expectation_of_twisted(model, zeta, &model.power(v, k)?, zeta)?;
            Ok((k, y.norm2(), y.is_zero()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let worst = defects
        .iter()
        .filter(|d| !d.2)
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.abs().cmp(&a.0.abs())));
    let max_defect = worst.map_or(0.0, |w| w.1);
    let wandering = if S::is_exact() {
        worst.is_none()
    } else {
        max_defect <= tol * scale
    };
    Ok(WanderingReport {
        horizon,
        wandering,
        max_defect,
        worst_n: worst.map(|w| w.0),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummabilityReport {
    /// Σ_k ‖𝔼_A(ξ₁ v^k ξ₂*)‖₂² through group-algebra products.
    pub lhs: f64,
    /// Σ_k Σ_p |κ(p, v^k)|² through direct pairings of the bivariate coefficients.
    pub rhs: f64,
    /// The k that can contribute, computed from exact solution sets.
    pub ks: Vec<i64>,
}

/// Both sides of the summability identity over the exact set of contributing k.
pub fn summability_identity(
    model: &GroupModel,
    xi1: &GroupAlgebraElement<Complex64>,
    xi2: &GroupAlgebraElement<Complex64>,
    v: &Element,
) -> Result<SummabilityReport, MasaError> {
    if !(xi1.is_zero() || xi2.is_zero()) {
        require_generator(model, v)?;
    }
    let pairs: Vec<(&Element, &Element)> = xi1
        .terms()
        .keys()
        .flat_map(|g| xi2.terms().keys().map(move |h| (g, h)))
        .collect();
    let sets = pairs
        .par_iter()
        .map(|(g, h)| -> Result<Vec<i64>, MasaError> {
            let s = solution_set(model, g, v, h)?;
            s.finite_elements().ok_or_else(|| MasaError::Divergent {
                g: format_element(g),
                h: format_element(h),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let ks: Vec<i64> = sets.into_iter().flatten().collect::<BTreeSet<_>>().into_iter().collect();
    let lhs = ks
        .par_iter()
        .map(|&k| -> Result<f64, MasaError> {
            Ok(expectation_of_twisted(model, xi1, &model.power(v, k)?, xi2)?.norm2_sq().re)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .sum();
    let rhs = crate::bimodule::coefficient_energy(model, xi1, xi2, v, &ks)?;
    Ok(SummabilityReport { lhs, rhs, ks })
}

#[cfg(test)]
mod tests;
