//! Bivariate measures on finite models and the identities relating them to
//! the group algebra and to crossed products by finite abelian groups.

pub mod eta;
pub mod fingerprint;
pub mod koopman;
pub mod measure;

use num_complex::Complex64;
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

pub use eta::{eta_from_vectors, eta_with_table, fiber_mass_check, fiber_norm_identity, CharacterTable, FiberMassCheck};
pub use fingerprint::{compare, fingerprint, MeasureClassFingerprint, Weights, DEFAULT_N_MAX};
pub use koopman::{CrossedVector, FiniteKoopmanModel, KoopmanDoc, SnagResult};
pub use measure::{
    disintegrate, fiber_mixing_profile, polarization_check, Axis, Base, BivariateMeasure, DisintegrationFibers,
    FiberProfileSummary, MeasureJson, PolarizationReport,
};

use crate::group_masa::{GroupAlgebraElement, MasaError};
use crate::groups::{format_element, Element, GroupError, GroupModel};
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BimoduleError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Masa(#[from] MasaError),
    #[error("the marked subgroup is infinite; a finite truncation is required")]
    InfiniteMarked,
    #[error("character value exp(2πi·{0}) is not representable exactly in this field")]
    NotRepresentable(String),
    #[error("no circle embedding declared for X")]
    NoCircleEmbedding,
    #[error("base measure vanishes at {0} while the measure does not")]
    ZeroBase(usize),
    #[error("fiber at {0} is not a positive measure")]
    NotPositive(usize),
    #[error("function is not mean-zero (mean {0})")]
    NotMeanZero(f64),
    #[error("invalid Koopman model: {0}")]
    InvalidModel(String),
    #[error("invalid weights: {0}")]
    Weights(String),
    #[error("size mismatch: {0}")]
    Size(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// κ(p, q) = ⟨u_p ξ₁ u_q, ξ₂⟩ = Σ_g ξ₁(g)·conj(ξ₂(p g q)).
pub fn kappa<S: Scalar>(
    model: &GroupModel,
    xi1: &GroupAlgebraElement<S>,
    xi2: &GroupAlgebraElement<S>,
    p: &Element,
    q: &Element,
) -> Result<S, GroupError> {
    let mut acc = S::zero();
    for (g, a) in xi1.terms() {
        let pgq = model.product([p, g, q])?;
        if let Some(b) = xi2.terms().get(&pgq) {
            acc = acc + a.clone() * b.conj();
        }
    }
    Ok(acc)
}

/// Σ_{k ∈ ks} Σ_{p ∈ Γ₀} |κ(p, v^k)|², enumerating only the p that can pair.
pub fn coefficient_energy(
    model: &GroupModel,
    xi1: &GroupAlgebraElement<Complex64>,
    xi2: &GroupAlgebraElement<Complex64>,
    v: &Element,
    ks: &[i64],
) -> Result<f64, MasaError> {
    let index: HashMap<&Element, Complex64> = xi2.terms().iter().map(|(g, c)| (g, *c)).collect();
    let mut total = 0.0;
    for &k in ks {
        let vk = model.power(v, k)?;
        let vk_inv = model.invert(&vk)?;
        let mut ps: BTreeSet<Element> = BTreeSet::new();
        for g in xi1.terms().keys() {
            let ginv = model.invert(g)?;
            for h in index.keys() {
                let p = model.product([*h, &vk_inv, &ginv])?;
                if model.in_marked(&p)? {
                    ps.insert(p);
                }
            }
        }
        for p in &ps {
            let c = kappa(model, xi1, xi2, p, &vk)?;
            total += c.norm_sqr();
        }
    }
    Ok(total)
}

pub(crate) fn describe(g: &Element) -> String {
    format_element(g)
}
