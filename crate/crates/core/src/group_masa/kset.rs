//! Exact solution sets {k ∈ ℤ : g·v^k·h⁻¹ ∈ Γ₀}.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use std::collections::BTreeSet;

use super::MasaError;
use crate::groups::{word, Element, GroupModel, Kind, Marked};

/// A subset of ℤ that is finite or a union of residue classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KSet {
    Finite(BTreeSet<i64>),
    Periodic { modulus: u64, residues: BTreeSet<u64> },
}

impl KSet {
    pub fn empty() -> KSet {
        KSet::Finite(BTreeSet::new())
    }

    pub fn all() -> KSet {
        KSet::Periodic {
            modulus: 1,
            residues: [0].into_iter().collect(),
        }
    }

    fn all_or_empty(all: bool) -> KSet {
        if all {
            KSet::all()
        } else {
            KSet::empty()
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            KSet::Finite(s) => s.is_empty(),
            KSet::Periodic { residues, .. } => residues.is_empty(),
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, KSet::Periodic { residues, .. } if !residues.is_empty())
    }

    pub fn contains(&self, k: i64) -> bool {
        match self {
            KSet::Finite(s) => s.contains(&k),
            KSet::Periodic { modulus, residues } => residues.contains(&(k.rem_euclid(*modulus as i64) as u64)),
        }
    }

    pub fn intersect(&self, other: &KSet) -> KSet {
        match (self, other) {
            (KSet::Finite(a), b) | (b, KSet::Finite(a)) => KSet::Finite(a.iter().copied().filter(|&k| b.contains(k)).collect()),
            (KSet::Periodic { modulus: m1, .. }, KSet::Periodic { modulus: m2, .. }) => {
                let m = num_integer::lcm(*m1, *m2);
                let residues = (0..m).filter(|&r| self.contains(r as i64) && other.contains(r as i64)).collect();
                KSet::Periodic { modulus: m, residues }
            }
        }
    }

    /// Elements of a finite set, or None if infinite.
    pub fn finite_elements(&self) -> Option<Vec<i64>> {
        match self {
            KSet::Finite(s) => Some(s.iter().copied().collect()),
            KSet::Periodic { residues, .. } if residues.is_empty() => Some(vec![]),
            _ => None,
        }
    }
}

fn euler_phi(mut n: u64) -> u64 {
    let mut out = n;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            while n % p == 0 {
                n /= p;
            }
            out -= out / p;
        }
        p += 1;
    }
    if n > 1 {
        out -= out / n;
    }
    out
}

/// lcm of all m with φ(m) ≤ d: every periodic orbit of a d×d integer matrix has period dividing it.
pub fn period_bound(d: usize) -> u64 {
    let limit = 2 * (d as u64).pow(2) + 2;
    (1..=limit)
        .filter(|&m| euler_phi(m) <= d as u64)
        .fold(1, num_integer::lcm)
}

/// Minimal period of y under A in a semidirect model, if y is periodic.
pub fn orbit_period(model: &GroupModel, y: &[BigInt]) -> Result<Option<u64>, MasaError> {
    let Kind::Semidirect { matrix, .. } = model.kind() else {
        return Err(MasaError::Unsupported("orbit period needs a semidirect model".into()));
    };
    let l = period_bound(matrix.dim());
    if model.act(l as i64, y)? != y {
        return Ok(None);
    }
    for p in 1..=l {
        if l % p == 0 && model.act(p as i64, y)? == y {
            return Ok(Some(p));
        }
    }
    Ok(Some(l))
}

fn sup_norm(v: &[BigInt]) -> BigInt {
    v.iter().map(|x| x.abs()).max().unwrap_or_default()
}

const ORBIT_SCAN_CAP: i64 = 100_000;
const ORBIT_ESCAPE_RUN: i64 = 64;

/// {n : A^n y = x} for a non-periodic y, by scanning until the orbit leaves the ball of radius ‖x‖.
fn orbit_hits(model: &GroupModel, y: &[BigInt], x: &[BigInt]) -> Result<BTreeSet<i64>, MasaError> {
    let Kind::Semidirect { matrix, inverse } = model.kind() else {
        unreachable!()
    };
    let bound = sup_norm(x);
    let mut hits = BTreeSet::new();
    if y == x {
        hits.insert(0);
    }
    for (step, dir) in [(matrix, 1i64), (inverse, -1i64)] {
        let mut cur = y.to_vec();
        let mut run = 0;
        let mut n = 0;
        while run < ORBIT_ESCAPE_RUN {
            n += dir;
            if n.abs() > ORBIT_SCAN_CAP {
                return Err(MasaError::Unsupported("orbit scan did not terminate".into()));
            }
            cur = step.apply(&cur);
            if cur == x {
                hits.insert(n);
            }
            run = if sup_norm(&cur) > bound { run + 1 } else { 0 };
        }
    }
    Ok(hits)
}

/// {k : g·v^k·h⁻¹ ∈ Γ₀} for v ∈ Γ₀.
pub fn solution_set(model: &GroupModel, g: &Element, v: &Element, h: &Element) -> Result<KSet, MasaError> {
    let hinv = model.invert(h)?;
    if model.is_identity(v)? {
        return Ok(KSet::all_or_empty(model.in_marked(&model.multiply(g, &hinv)?)?));
    }
    match (model.kind(), model.marked()) {
        (Kind::Abelian { .. }, _) | (Kind::Free { .. }, Marked::Whole) => {
            Ok(KSet::all_or_empty(model.in_marked(&model.multiply(g, &hinv)?)?))
        }
        (Kind::Free { .. }, Marked::FreeCyclic { conj, root, step }) => {
            let (Element::Word(gw), Element::Word(hw)) = (g, h) else {
                return Err(MasaError::Group(crate::groups::GroupError::MixedModel));
            };
            let ci = word::invert(conj);
            let g1 = word::multiply(&word::multiply(&ci, gw), conj);
            let h1 = word::multiply(&word::multiply(&ci, hw), conj);
            match (word::exponent_in(&g1, root), word::exponent_in(&h1, root)) {
                (Some(a), Some(b)) => Ok(KSet::all_or_empty((a - b) % step == 0)),
                (Some(_), None) | (None, Some(_)) => Ok(KSet::empty()),
                (None, None) => {
                    let window = (2 * (g1.len() + h1.len()) / root.len() + 3) as i64;
                    let mut hits = BTreeSet::new();
                    for k in -window..=window {
                        let p = model.product([g, &model.power(v, k)?, &hinv])?;
                        if model.in_marked(&p)? {
                            hits.insert(k);
                        }
                    }
                    Ok(KSet::Finite(hits))
                }
            }
        }
        (Kind::Semidirect { .. }, Marked::ActingZ) => {
            let (Element::Semidirect(x, p), Element::Semidirect(_, j), Element::Semidirect(y, q)) = (g, v, h) else {
                return Err(MasaError::Group(crate::groups::GroupError::MixedModel));
            };
            let (p, q, j) = (*p, *q, *j);
            // g v^k h⁻¹ ∈ Γ₀ iff x = A^{p−q+jk} y
            if y.iter().all(Zero::is_zero) {
                return Ok(KSet::all_or_empty(x.iter().all(Zero::is_zero)));
            }
            match orbit_period(model, y)? {
                Some(per) => {
                    let mut ns = BTreeSet::new();
                    for n in 0..per as i64 {
                        if model.act(n, y)? == *x {
                            ns.insert(n);
                        }
                    }
                    let residues = (0..per)
                        .filter(|&k| ns.contains(&(p - q + j * k as i64).rem_euclid(per as i64)))
                        .collect();
                    Ok(KSet::Periodic { modulus: per, residues })
                }
                None => {
                    let hits = orbit_hits(model, y, x)?;
                    Ok(KSet::Finite(
                        hits.into_iter()
                            .filter(|n| (n - p + q) % j == 0)
                            .map(|n| (n - p + q) / j)
                            .collect(),
                    ))
                }
            }
        }
        (Kind::Semidirect { .. }, Marked::Normal) => {
            let (Element::Semidirect(_, p), Element::Semidirect(_, q)) = (g, h) else {
                return Err(MasaError::Group(crate::groups::GroupError::MixedModel));
            };
            Ok(KSet::all_or_empty(p == q))
        }
        (Kind::DirectProduct(factors), Marked::Product) => {
            let (Element::Tuple(gs), Element::Tuple(vs), Element::Tuple(hs)) = (g, v, h) else {
                return Err(MasaError::Group(crate::groups::GroupError::MixedModel));
            };
            let mut acc = KSet::all();
            for (i, m) in factors.iter().enumerate() {
                acc = acc.intersect(&component_set(m, &gs[i], &vs[i], &hs[i])?);
                if acc.is_empty() {
                    break;
                }
            }
            Ok(acc)
        }
        _ => Err(MasaError::Unsupported("solution sets are not implemented for this model".into())),
    }
}

/// Like [`solution_set`] but allows v of finite order in the component.
fn component_set(model: &GroupModel, g: &Element, v: &Element, h: &Element) -> Result<KSet, MasaError> {
    let coords = model
        .marked_coords(v)?
        .ok_or_else(|| MasaError::NotInMarked(crate::groups::format_element(v)))?;
    if coords.free.iter().all(|&c| c == 0) {
        // v has finite order t, so the set is periodic with modulus t
        let mut t = 1u64;
        let mut p = v.clone();
        while !model.is_identity(&p)? {
            p = model.multiply(&p, v)?;
            t += 1;
        }
        let hinv = model.invert(h)?;
        let mut residues = BTreeSet::new();
        for k in 0..t {
            if model.in_marked(&model.product([g, &model.power(v, k as i64)?, &hinv])?)? {
                residues.insert(k);
            }
        }
        return Ok(KSet::Periodic { modulus: t, residues });
    }
    solution_set(model, g, v, h)
}
