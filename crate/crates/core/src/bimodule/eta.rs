use num_rational::Rational64;
use std::collections::BTreeMap;

use super::measure::{disintegrate, Axis, Base, BivariateMeasure};
use super::{kappa, BimoduleError};
use crate::circle_measures::Point;
use crate::group_masa::GroupAlgebraElement;
use crate::groups::{Element, GroupModel};
use crate::Scalar;

/// Characters of a finite marked subgroup Γ₀, i.e. the points of X = Γ̂₀.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacterTable {
    elements: Vec<Element>,
    /// phases[χ][p] ∈ [0, 1) with χ(p) = exp(2πi·phase).
    phases: Vec<Vec<Rational64>>,
    circle: Option<Vec<Point>>,
}

impl CharacterTable {
    pub fn new(model: &GroupModel, budget: usize) -> Result<Self, BimoduleError> {
        let shape = model.marked_shape();
        if !shape.is_finite() {
            return Err(BimoduleError::InfiniteMarked);
        }
        let order: u64 = shape.torsion.iter().product();
        let layers = model.marked_ball_layers(order as usize + 1, budget)?;
        let mut coords: BTreeMap<Vec<i64>, Element> = BTreeMap::new();
        for g in layers.into_iter().flatten() {
            let c = model.marked_coords(&g)?.ok_or(BimoduleError::InfiniteMarked)?;
            let reduced: Vec<i64> = c.torsion.iter().zip(&shape.torsion).map(|(&x, &d)| x.rem_euclid(d as i64)).collect();
            coords.insert(reduced, g);
        }
        let (keys, elements): (Vec<Vec<i64>>, Vec<Element>) = coords.into_iter().unzip();

        // restrict every character of Π ℤ/d_i and keep the distinct restrictions
        let mut phases: Vec<Vec<Rational64>> = Vec::new();
        for j in 0..order {
            let mut rest = j;
            let digits: Vec<i64> = shape
                .torsion
                .iter()
                .map(|&d| {
                    let x = rest % d;
                    rest /= d;
                    x as i64
                })
                .collect();
            let row: Vec<Rational64> = keys
                .iter()
                .map(|c| {
                    let r = c
                        .iter()
                        .zip(&digits)
                        .zip(&shape.torsion)
                        .fold(Rational64::from_integer(0), |acc, ((&x, &y), &d)| acc + Rational64::new(x * y, d as i64));
                    r - r.floor()
                })
                .collect();
            if !phases.contains(&row) {
                phases.push(row);
            }
        }
        if phases.len() != elements.len() {
            return Err(BimoduleError::Size(format!(
                "{} characters for a subgroup of order {}",
                phases.len(),
                elements.len()
            )));
        }
        // an element whose values separate the characters embeds X in the circle
        let circle = (0..elements.len())
            .find(|&p| {
                let mut col: Vec<Rational64> = phases.iter().map(|row| row[p]).collect();
                col.sort();
                col.dedup();
                col.len() == phases.len()
            })
            .map(|p| phases.iter().map(|row| Point::Rational(row[p])).collect());
        Ok(CharacterTable {
            elements,
            phases,
            circle,
        })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn circle(&self) -> Option<&[Point]> {
        self.circle.as_deref()
    }

    pub fn phase(&self, chi: usize, p: usize) -> Rational64 {
        self.phases[chi][p]
    }

    pub fn index_of(&self, g: &Element) -> Option<usize> {
        self.elements.iter().position(|e| e == g)
    }

    /// χ(p) for the character χ and element index p.
    pub fn value<S: Scalar>(&self, chi: usize, p: usize) -> Result<S, BimoduleError> {
        let r = self.phases[chi][p];
        S::root_of_unity(*r.numer(), *r.denom()).ok_or_else(|| BimoduleError::NotRepresentable(r.to_string()))
    }

    /// values[χ][p].
    pub fn values<S: Scalar>(&self) -> Result<Vec<Vec<S>>, BimoduleError> {
        (0..self.order())
            .map(|chi| (0..self.order()).map(|p| self.value(chi, p)).collect())
            .collect()
    }

    /// The function t ↦ Σ_p a_p χ_t(p) on X for a ∈ L(Γ₀).
    pub fn transform<S: Scalar>(&self, a: &GroupAlgebraElement<S>) -> Result<Vec<S>, BimoduleError> {
        let mut out = vec![S::zero(); self.order()];
        for (g, c) in a.terms() {
            let p = self.index_of(g).ok_or_else(|| BimoduleError::Size(format!("{} is not in Γ₀", super::describe(g))))?;
            for (t, slot) in out.iter_mut().enumerate() {
                *slot = slot.clone() + c.clone() * self.value::<S>(t, p)?;
            }
        }
        Ok(out)
    }

    fn attach<S: Scalar>(&self, m: BivariateMeasure<S>) -> Result<BivariateMeasure<S>, BimoduleError> {
        match &self.circle {
            Some(c) => m.with_circle(c.clone()),
            None => Ok(m),
        }
    }
}

/// η_{ζ₁,ζ₂} on X × X, solved from κ(p,q) = Σ η(χ,ψ) χ(p) ψ(q) by inverting
/// the character transform.
pub fn eta_from_vectors<S: Scalar>(
    model: &GroupModel,
    zeta1: &GroupAlgebraElement<S>,
    zeta2: &GroupAlgebraElement<S>,
    budget: usize,
) -> Result<(BivariateMeasure<S>, CharacterTable), BimoduleError> {
    let table = CharacterTable::new(model, budget)?;
    let eta = eta_with_table(model, &table, zeta1, zeta2)?;
    Ok((eta, table))
}

pub fn eta_with_table<S: Scalar>(
    model: &GroupModel,
    table: &CharacterTable,
    zeta1: &GroupAlgebraElement<S>,
    zeta2: &GroupAlgebraElement<S>,
) -> Result<BivariateMeasure<S>, BimoduleError> {
    let n = table.order();
    let vals: Vec<Vec<S>> = table.values()?;
    let mut k = vec![vec![S::zero(); n]; n];
    if !zeta1.is_zero() && !zeta2.is_zero() {
        for (p, row) in k.iter_mut().enumerate() {
            for (q, slot) in row.iter_mut().enumerate() {
                *slot = kappa(model, zeta1, zeta2, &table.elements[p], &table.elements[q])?;
            }
        }
    }
    // A(χ, q) = Σ_p κ(p,q)·conj χ(p), then η(χ,ψ) = Σ_q A(χ,q)·conj ψ(q) / n²
    let norm = S::from_i64((n * n) as i64);
    let mut points = Vec::new();
    for chi in 0..n {
        let a: Vec<S> = (0..n)
            .map(|q| (0..n).fold(S::zero(), |acc, p| acc + k[p][q].clone() * vals[chi][p].conj()))
            .collect();
        for psi in 0..n {
            let v = (0..n).fold(S::zero(), |acc, q| acc + a[q].clone() * vals[psi][q].conj());
            points.push(((chi, psi), v / norm.clone()));
        }
    }
    table.attach(BivariateMeasure::from_points(n, points)?)
}

/// Both sides of the fiber-mass identity fiber_t(X × X) = 𝔼_A(ζ₁ζ₂*)(t),
/// with fibers taken over the first coordinate against the Haar base.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberMassCheck<S: Scalar> {
    pub fiber_totals: Vec<S>,
    pub expectation: Vec<S>,
}

impl<S: Scalar> FiberMassCheck<S> {
    pub fn exact(&self) -> bool {
        self.fiber_totals == self.expectation
    }

    pub fn defect(&self) -> f64 {
        self.fiber_totals
            .iter()
            .zip(&self.expectation)
            .map(|(a, b)| (a.to_c64() - b.to_c64()).norm())
            .fold(0.0, f64::max)
    }
}

pub fn fiber_mass_check<S: Scalar>(
    model: &GroupModel,
    zeta1: &GroupAlgebraElement<S>,
    zeta2: &GroupAlgebraElement<S>,
    budget: usize,
) -> Result<FiberMassCheck<S>, BimoduleError> {
    let (eta, table) = eta_from_vectors(model, zeta1, zeta2, budget)?;
    let fibers = disintegrate(&eta, Axis::First, Base::Haar)?;
    let e = zeta1.mul(model, &zeta2.adjoint(model)?)?.conditional_expectation(model)?;
    Ok(FiberMassCheck {
        fiber_totals: fibers.fiber_totals(),
        expectation: table.transform(&e)?,
    })
}

/// Both sides of ‖𝔼_A(bζ₁wζ₂*)‖₂² = Σ_t |b(t)|²·|ηᵗ(1⊗w)|²·λ(t) for b, w ∈ L(Γ₀).
pub fn fiber_norm_identity<S: Scalar>(
    model: &GroupModel,
    zeta1: &GroupAlgebraElement<S>,
    zeta2: &GroupAlgebraElement<S>,
    b: &GroupAlgebraElement<S>,
    w: &GroupAlgebraElement<S>,
    budget: usize,
) -> Result<(S, S), BimoduleError> {
    let (eta, table) = eta_from_vectors(model, zeta1, zeta2, budget)?;
    let n = table.order();
    let x = b.mul(model, zeta1)?.mul(model, w)?.mul(model, &zeta2.adjoint(model)?)?;
    let lhs = x.conditional_expectation(model)?.norm2_sq();
    let fibers = disintegrate(&eta, Axis::First, Base::Haar)?;
    let bt = table.transform(b)?;
    let ws = table.transform(w)?;
    let mut rhs = S::zero();
    for (&t, f) in &fibers.fibers {
        let pair = f.integrate(|_, s| ws[s].clone());
        rhs = rhs + bt[t].abs_sq() * pair.abs_sq();
    }
    Ok((lhs, rhs / S::from_i64(n as i64)))
}

