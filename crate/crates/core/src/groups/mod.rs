//! Exact arithmetic in decidable group models with a marked abelian subgroup Γ₀.
//!
//! Supported kinds are free groups, free and direct products, finitely
//! generated abelian groups (invariant 0 stands for ℤ), finite cyclic groups
//! and semidirect products ℤ^d ⋊_A ℤ with (v,m)(w,n) = (v + A^m w, m + n).

pub mod matrix;
pub mod parse;
pub mod word;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use std::collections::BTreeSet;
use thiserror::Error;

pub use matrix::{IntMatrix, Lattice};
pub use parse::{format_element, parse_element, ModelDoc};
pub use word::Word;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("elements do not belong to the same model")]
    MixedModel,
    #[error("budget exceeded: more than {budget} elements needed")]
    BudgetExceeded { budget: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("marked subgroup is not abelian: {0}")]
    NonAbelianMarked(String),
    #[error("integer overflow in coordinates")]
    Overflow,
}

pub fn parse_err(pos: usize, msg: impl Into<String>) -> GroupError {
    GroupError::Parse { pos, msg: msg.into() }
}

/// Normal form of a group element; the variant is fixed by the model kind.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    /// Reduced word in a free group.
    Word(Word),
    /// Alternating syllables (factor index, non-identity element).
    FreeProd(Vec<(usize, Element)>),
    Tuple(Vec<Element>),
    /// Coordinates reduced modulo the nonzero invariants.
    Abelian(Vec<i64>),
    Semidirect(Vec<BigInt>, i64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    Free { rank: usize },
    FreeProduct(Vec<GroupModel>),
    DirectProduct(Vec<GroupModel>),
    Abelian { invariants: Vec<u64> },
    Semidirect { matrix: IntMatrix, inverse: IntMatrix },
}

/// The marked abelian subgroup Γ₀.
#[derive(Debug, Clone, PartialEq)]
pub enum Marked {
    Trivial,
    Whole,
    /// {u·r^{step·k}·u⁻¹ : k ∈ ℤ} with r primitive and cyclically reduced.
    FreeCyclic { conj: Word, root: Word, step: i64 },
    /// Sublattice of ℤ^n containing the torsion relations.
    Lattice(Lattice),
    /// {0} ⋊ ℤ in a semidirect product.
    ActingZ,
    /// ℤ^d ⋊ {0} in a semidirect product.
    Normal,
    /// Product of the factors' marked subgroups.
    Product,
    /// Marked subgroup of one free factor.
    Factor(usize),
}

/// Shape ℤ^free × Π ℤ/torsion_i of the coordinates used for Γ₀.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoordShape {
    pub free: usize,
    pub torsion: Vec<u64>,
}

impl CoordShape {
    fn concat(mut self, other: CoordShape) -> CoordShape {
        self.free += other.free;
        self.torsion.extend(other.torsion);
        self
    }

    pub fn is_finite(&self) -> bool {
        self.free == 0
    }
}

/// Coordinates of an element of Γ₀: integer part and torsion part.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Coords {
    pub free: Vec<i64>,
    pub torsion: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupModel {
    kind: Kind,
    marked: Marked,
}

impl GroupModel {
    pub fn new(kind: Kind, marked: Marked) -> Result<Self, GroupError> {
        let model = GroupModel { kind, marked };
        model.validate_marked()?;
        Ok(model)
    }

    /// Free group of the given rank with Γ₀ generated by `gens` (pairwise commuting).
    pub fn free(rank: usize, gens: &[Word]) -> Result<Self, GroupError> {
        let marked = free_marked(gens)?;
        GroupModel::new(Kind::Free { rank }, marked)
    }

    pub fn abelian(invariants: Vec<u64>, marked_gens: Option<&[Vec<i64>]>) -> Result<Self, GroupError> {
        let marked = match marked_gens {
            None => Marked::Whole,
            Some(g) => abelian_marked(&invariants, g)?,
        };
        GroupModel::new(Kind::Abelian { invariants }, marked)
    }

    pub fn semidirect(matrix: IntMatrix, marked: Marked) -> Result<Self, GroupError> {
        let inverse = matrix
            .inverse()
            .ok_or_else(|| GroupError::InvalidModel("matrix is not invertible over ℤ".into()))?;
        GroupModel::new(Kind::Semidirect { matrix, inverse }, marked)
    }

    pub fn direct_product(factors: Vec<GroupModel>) -> Result<Self, GroupError> {
        GroupModel::new(Kind::DirectProduct(factors), Marked::Product)
    }

    pub fn free_product(factors: Vec<GroupModel>, marked_factor: Option<usize>) -> Result<Self, GroupError> {
        let marked = marked_factor.map_or(Marked::Trivial, Marked::Factor);
        GroupModel::new(Kind::FreeProduct(factors), marked)
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn marked(&self) -> &Marked {
        &self.marked
    }

    fn validate_marked(&self) -> Result<(), GroupError> {
        match (&self.kind, &self.marked) {
            (_, Marked::Trivial) => Ok(()),
            (Kind::Free { rank }, Marked::Whole) if *rank <= 1 => Ok(()),
            (Kind::Free { rank }, Marked::FreeCyclic { root, .. }) => {
                if root.iter().any(|l| l.unsigned_abs() as usize > *rank) {
                    Err(GroupError::InvalidModel("marked word uses a missing generator".into()))
                } else {
                    Ok(())
                }
            }
            (Kind::Abelian { .. }, Marked::Whole) => Ok(()),
            (Kind::Abelian { invariants }, Marked::Lattice(l)) if l.dim() == invariants.len() => Ok(()),
            (Kind::Semidirect { .. }, Marked::ActingZ | Marked::Normal) => Ok(()),
            (Kind::DirectProduct(_), Marked::Product) => Ok(()),
            (Kind::FreeProduct(f), Marked::Factor(i)) if *i < f.len() => Ok(()),
            (_, m) => Err(GroupError::NonAbelianMarked(format!("{m:?} is not supported for this kind"))),
        }
    }

    pub fn identity(&self) -> Element {
        match &self.kind {
            Kind::Free { .. } => Element::Word(vec![]),
            Kind::FreeProduct(_) => Element::FreeProd(vec![]),
            Kind::DirectProduct(f) => Element::Tuple(f.iter().map(GroupModel::identity).collect()),
            Kind::Abelian { invariants } => Element::Abelian(vec![0; invariants.len()]),
            Kind::Semidirect { matrix, .. } => Element::Semidirect(vec![BigInt::zero(); matrix.dim()], 0),
        }
    }

    /// Checks that `g` is a normal form of this model.
    pub fn check(&self, g: &Element) -> Result<(), GroupError> {
        let ok = match (&self.kind, g) {
            (Kind::Free { rank }, Element::Word(w)) => {
                w.iter().all(|&l| l != 0 && l.unsigned_abs() as usize <= *rank) && word::reduce(w.clone()) == *w
            }
            (Kind::FreeProduct(f), Element::FreeProd(s)) => {
                for (i, (k, e)) in s.iter().enumerate() {
                    if *k >= f.len() || (i > 0 && s[i - 1].0 == *k) {
                        return Err(GroupError::MixedModel);
                    }
                    f[*k].check(e)?;
                    if f[*k].is_identity(e)? {
                        return Err(GroupError::MixedModel);
                    }
                }
                true
            }
            (Kind::DirectProduct(f), Element::Tuple(t)) => {
                if f.len() != t.len() {
                    return Err(GroupError::MixedModel);
                }
                for (m, e) in f.iter().zip(t) {
                    m.check(e)?;
                }
                true
            }
            (Kind::Abelian { invariants }, Element::Abelian(v)) => {
                v.len() == invariants.len()
                    && v.iter().zip(invariants).all(|(&x, &d)| d == 0 || (0..d as i64).contains(&x))
            }
            (Kind::Semidirect { matrix, .. }, Element::Semidirect(v, _)) => v.len() == matrix.dim(),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(GroupError::MixedModel)
        }
    }

    pub fn multiply(&self, a: &Element, b: &Element) -> Result<Element, GroupError> {
        match (&self.kind, a, b) {
            (Kind::Free { .. }, Element::Word(x), Element::Word(y)) => Ok(Element::Word(word::multiply(x, y))),
            (Kind::FreeProduct(f), Element::FreeProd(x), Element::FreeProd(y)) => {
                let mut left = x.clone();
                let mut right = y.iter().cloned().peekable();
                while let (Some((i, _)), Some((j, _))) = (left.last(), right.peek()) {
                    if i != j {
                        break;
                    }
                    let (i, l) = left.pop().unwrap();
                    let (_, r) = right.next().unwrap();
                    let p = f[i].multiply(&l, &r)?;
                    if !f[i].is_identity(&p)? {
                        left.push((i, p));
                        break;
                    }
                }
                left.extend(right);
                Ok(Element::FreeProd(left))
            }
            (Kind::DirectProduct(f), Element::Tuple(x), Element::Tuple(y)) if x.len() == f.len() && y.len() == f.len() => {
                let parts = f
                    .iter()
                    .zip(x.iter().zip(y))
                    .map(|(m, (p, q))| m.multiply(p, q))
                    .collect::<Result<_, _>>()?;
                Ok(Element::Tuple(parts))
            }
            (Kind::Abelian { invariants }, Element::Abelian(x), Element::Abelian(y))
                if x.len() == invariants.len() && y.len() == invariants.len() =>
            {
                let v = x
                    .iter()
                    .zip(y)
                    .zip(invariants)
                    .map(|((&p, &q), &d)| {
                        let s = p.checked_add(q).ok_or(GroupError::Overflow)?;
                        Ok(if d == 0 { s } else { s.rem_euclid(d as i64) })
                    })
                    .collect::<Result<_, GroupError>>()?;
                Ok(Element::Abelian(v))
            }
            (Kind::Semidirect { .. }, Element::Semidirect(v, m), Element::Semidirect(w, n)) => {
                let aw = self.act(*m, w)?;
                let sum = v.iter().zip(&aw).map(|(p, q)| p + q).collect();
                Ok(Element::Semidirect(sum, m.checked_add(*n).ok_or(GroupError::Overflow)?))
            }
            _ => Err(GroupError::MixedModel),
        }
    }

    /// A^m w in a semidirect model.
    pub fn act(&self, m: i64, w: &[BigInt]) -> Result<Vec<BigInt>, GroupError> {
        let Kind::Semidirect { matrix, inverse } = &self.kind else {
            return Err(GroupError::MixedModel);
        };
        if w.len() != matrix.dim() {
            return Err(GroupError::MixedModel);
        }
        let p = if m >= 0 { matrix.pow(m as u64) } else { inverse.pow(m.unsigned_abs()) };
        Ok(p.apply(w))
    }

    pub fn invert(&self, g: &Element) -> Result<Element, GroupError> {
        match (&self.kind, g) {
            (Kind::Free { .. }, Element::Word(w)) => Ok(Element::Word(word::invert(w))),
            (Kind::FreeProduct(f), Element::FreeProd(s)) => Ok(Element::FreeProd(
                s.iter()
                    .rev()
                    .map(|(i, e)| Ok((*i, f.get(*i).ok_or(GroupError::MixedModel)?.invert(e)?)))
                    .collect::<Result<_, GroupError>>()?,
            )),
            (Kind::DirectProduct(f), Element::Tuple(t)) if t.len() == f.len() => Ok(Element::Tuple(
                f.iter().zip(t).map(|(m, e)| m.invert(e)).collect::<Result<_, _>>()?,
            )),
            (Kind::Abelian { invariants }, Element::Abelian(v)) if v.len() == invariants.len() => Ok(Element::Abelian(
                v.iter()
                    .zip(invariants)
                    .map(|(&x, &d)| if d == 0 { -x } else { (-x).rem_euclid(d as i64) })
                    .collect(),
            )),
            (Kind::Semidirect { .. }, Element::Semidirect(v, m)) => {
                let back = self.act(-*m, v)?;
                Ok(Element::Semidirect(back.into_iter().map(|x| -x).collect(), -*m))
            }
            _ => Err(GroupError::MixedModel),
        }
    }

    pub fn is_identity(&self, g: &Element) -> Result<bool, GroupError> {
        self.check(g)?;
        Ok(*g == self.identity())
    }

    pub fn power(&self, g: &Element, k: i64) -> Result<Element, GroupError> {
        let base = if k < 0 { self.invert(g)? } else { g.clone() };
        let mut acc = self.identity();
        let mut sq = base;
        let mut e = k.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.multiply(&acc, &sq)?;
            }
            e >>= 1;
            if e > 0 {
                sq = self.multiply(&sq, &sq)?;
            }
        }
        Ok(acc)
    }

    /// Product of a sequence of elements.
    pub fn product<'a>(&self, items: impl IntoIterator<Item = &'a Element>) -> Result<Element, GroupError> {
        items
            .into_iter()
            .try_fold(self.identity(), |acc, x| self.multiply(&acc, x))
    }

    /// Symmetric standard generating set.
    pub fn generators(&self) -> Vec<Element> {
        match &self.kind {
            Kind::Free { rank } => (1..=*rank as i32)
                .flat_map(|g| [Element::Word(vec![g]), Element::Word(vec![-g])])
                .collect(),
            Kind::FreeProduct(f) => f
                .iter()
                .enumerate()
                .flat_map(|(i, m)| m.generators().into_iter().map(move |g| Element::FreeProd(vec![(i, g)])))
                .collect(),
            Kind::DirectProduct(f) => {
                let ids: Vec<Element> = f.iter().map(GroupModel::identity).collect();
                f.iter()
                    .enumerate()
                    .flat_map(|(i, m)| {
                        let ids = ids.clone();
                        m.generators().into_iter().map(move |g| {
                            let mut t = ids.clone();
                            t[i] = g;
                            Element::Tuple(t)
                        })
                    })
                    .collect()
            }
            Kind::Abelian { invariants } => {
                let mut out = Vec::new();
                for (i, &d) in invariants.iter().enumerate() {
                    if d == 1 {
                        continue;
                    }
                    let unit = |s: i64| {
                        let mut v = vec![0i64; invariants.len()];
                        v[i] = if d == 0 { s } else { s.rem_euclid(d as i64) };
                        Element::Abelian(v)
                    };
                    let (p, m) = (unit(1), unit(-1));
                    let distinct = p != m;
                    out.push(p);
                    if distinct {
                        out.push(m);
                    }
                }
                out
            }
            Kind::Semidirect { matrix, .. } => {
                let d = matrix.dim();
                let mut out = Vec::new();
                for i in 0..d {
                    for s in [1i64, -1] {
                        let mut v = vec![BigInt::zero(); d];
                        v[i] = BigInt::from(s);
                        out.push(Element::Semidirect(v, 0));
                    }
                }
                out.push(Element::Semidirect(vec![BigInt::zero(); d], 1));
                out.push(Element::Semidirect(vec![BigInt::zero(); d], -1));
                out
            }
        }
    }

    /// Elements of word length exactly r for r = 0..=R.
    pub fn ball_layers(&self, radius: usize, budget: usize) -> Result<Vec<Vec<Element>>, GroupError> {
        bfs_layers(self, &self.generators(), radius, budget)
    }

    /// All elements of word length ≤ R with respect to the standard generators.
    pub fn ball(&self, radius: usize, budget: usize) -> Result<Vec<Element>, GroupError> {
        Ok(self.ball_layers(radius, budget)?.into_iter().flatten().collect())
    }

    /// Exact membership in Γ₀.
    pub fn in_marked(&self, g: &Element) -> Result<bool, GroupError> {
        self.check(g)?;
        Ok(self.marked_coords(g)?.is_some())
    }

    /// Generators of Γ₀ (not symmetrized).
    pub fn marked_generators(&self) -> Vec<Element> {
        match (&self.kind, &self.marked) {
            (_, Marked::Trivial) => vec![],
            (Kind::Free { rank }, Marked::Whole) => (1..=*rank as i32).map(|g| Element::Word(vec![g])).collect(),
            (Kind::Free { .. }, Marked::FreeCyclic { conj, root, step }) => {
                vec![Element::Word(free_cyclic_element(conj, root, *step))]
            }
            (Kind::Abelian { invariants }, Marked::Whole) => (0..invariants.len())
                .filter(|&i| invariants[i] != 1)
                .map(|i| {
                    let mut v = vec![0; invariants.len()];
                    v[i] = 1;
                    Element::Abelian(v)
                })
                .collect(),
            (Kind::Abelian { invariants }, Marked::Lattice(l)) => {
                let mut out = BTreeSet::new();
                for row in lattice_rows(l) {
                    let v: Vec<i64> = row
                        .iter()
                        .zip(invariants)
                        .map(|(x, &d)| {
                            let x = x.to_i64().unwrap_or(0);
                            if d == 0 {
                                x
                            } else {
                                x.rem_euclid(d as i64)
                            }
                        })
                        .collect();
                    if v.iter().any(|&x| x != 0) {
                        out.insert(v);
                    }
                }
                out.into_iter().map(Element::Abelian).collect()
            }
            (Kind::Semidirect { matrix, .. }, Marked::ActingZ) => {
                vec![Element::Semidirect(vec![BigInt::zero(); matrix.dim()], 1)]
            }
            (Kind::Semidirect { matrix, .. }, Marked::Normal) => (0..matrix.dim())
                .map(|i| {
                    let mut v = vec![BigInt::zero(); matrix.dim()];
                    v[i] = BigInt::from(1);
                    Element::Semidirect(v, 0)
                })
                .collect(),
            (Kind::DirectProduct(f), Marked::Product) => {
                let ids: Vec<Element> = f.iter().map(GroupModel::identity).collect();
                let mut out = Vec::new();
                for (i, m) in f.iter().enumerate() {
                    for g in m.marked_generators() {
                        let mut t = ids.clone();
                        t[i] = g;
                        out.push(Element::Tuple(t));
                    }
                }
                out
            }
            (Kind::FreeProduct(f), Marked::Factor(i)) => f[*i]
                .marked_generators()
                .into_iter()
                .map(|g| Element::FreeProd(vec![(*i, g)]))
                .collect(),
            _ => vec![],
        }
    }

    /// Layers of the Γ₀-ball with respect to its own symmetric generators.
    pub fn marked_ball_layers(&self, radius: usize, budget: usize) -> Result<Vec<Vec<Element>>, GroupError> {
        let mut gens = Vec::new();
        for g in self.marked_generators() {
            let inv = self.invert(&g)?;
            gens.push(g.clone());
            if inv != g {
                gens.push(inv);
            }
        }
        bfs_layers(self, &gens, radius, budget)
    }

    pub fn marked_ball(&self, radius: usize, budget: usize) -> Result<Vec<Element>, GroupError> {
        Ok(self.marked_ball_layers(radius, budget)?.into_iter().flatten().collect())
    }

    /// Coordinate shape used by [`GroupModel::marked_coords`].
    pub fn marked_shape(&self) -> CoordShape {
        match (&self.kind, &self.marked) {
            (_, Marked::Trivial) => CoordShape::default(),
            (Kind::Free { rank }, Marked::Whole) => CoordShape { free: *rank, torsion: vec![] },
            (Kind::Free { .. }, Marked::FreeCyclic { .. }) => CoordShape { free: 1, torsion: vec![] },
            (Kind::Abelian { invariants }, _) => CoordShape {
                free: invariants.iter().filter(|&&d| d == 0).count(),
                torsion: invariants.iter().copied().filter(|&d| d != 0).collect(),
            },
            (Kind::Semidirect { .. }, Marked::ActingZ) => CoordShape { free: 1, torsion: vec![] },
            (Kind::Semidirect { matrix, .. }, Marked::Normal) => CoordShape { free: matrix.dim(), torsion: vec![] },
            (Kind::DirectProduct(f), _) => f
                .iter()
                .fold(CoordShape::default(), |acc, m| acc.concat(m.marked_shape())),
            (Kind::FreeProduct(f), Marked::Factor(i)) => f[*i].marked_shape(),
            _ => CoordShape::default(),
        }
    }

    /// Coordinates of g if g ∈ Γ₀, else None. The map is an injective homomorphism.
    pub fn marked_coords(&self, g: &Element) -> Result<Option<Coords>, GroupError> {
        let some = |free: Vec<i64>, torsion: Vec<i64>| Ok(Some(Coords { free, torsion }));
        match (&self.kind, &self.marked, g) {
            (_, Marked::Trivial, _) => {
                if self.is_identity(g)? {
                    some(vec![], vec![])
                } else {
                    Ok(None)
                }
            }
            (Kind::Free { rank }, Marked::Whole, Element::Word(w)) => {
                // rank ≤ 1: the exponent sum is the coordinate
                let mut c = vec![0i64; *rank];
                for &l in w {
                    c[l.unsigned_abs() as usize - 1] += l.signum() as i64;
                }
                some(c, vec![])
            }
            (Kind::Free { .. }, Marked::FreeCyclic { conj, root, step }, Element::Word(w)) => {
                let inner = word::multiply(&word::multiply(&word::invert(conj), w), conj);
                match word::exponent_in(&inner, root) {
                    Some(k) if k % step == 0 => some(vec![k / step], vec![]),
                    _ => Ok(None),
                }
            }
            (Kind::Abelian { invariants }, m, Element::Abelian(v)) => {
                let member = match m {
                    Marked::Whole => true,
                    Marked::Lattice(l) => l.contains_i64(v),
                    _ => false,
                };
                if !member {
                    return Ok(None);
                }
                let free = v.iter().zip(invariants).filter(|(_, &d)| d == 0).map(|(&x, _)| x).collect();
                let tors = v.iter().zip(invariants).filter(|(_, &d)| d != 0).map(|(&x, _)| x).collect();
                some(free, tors)
            }
            (Kind::Semidirect { .. }, Marked::ActingZ, Element::Semidirect(v, m)) => {
                if v.iter().all(Zero::is_zero) {
                    some(vec![*m], vec![])
                } else {
                    Ok(None)
                }
            }
            (Kind::Semidirect { .. }, Marked::Normal, Element::Semidirect(v, m)) => {
                if *m != 0 {
                    return Ok(None);
                }
                let c = v.iter().map(|x| x.to_i64().ok_or(GroupError::Overflow)).collect::<Result<_, _>>()?;
                some(c, vec![])
            }
            (Kind::DirectProduct(f), Marked::Product, Element::Tuple(t)) if t.len() == f.len() => {
                let mut out = Coords::default();
                for (m, e) in f.iter().zip(t) {
                    match m.marked_coords(e)? {
                        Some(c) => {
                            out.free.extend(c.free);
                            out.torsion.extend(c.torsion);
                        }
                        None => return Ok(None),
                    }
                }
                Ok(Some(out))
            }
            (Kind::FreeProduct(f), Marked::Factor(i), Element::FreeProd(s)) => match s.as_slice() {
                [] => Ok(Some(f[*i].marked_coords(&f[*i].identity())?.unwrap_or_default())),
                [(j, e)] if j == i => f[*i].marked_coords(e),
                _ => Ok(None),
            },
            _ => Err(GroupError::MixedModel),
        }
    }

    /// Inverse of [`GroupModel::marked_coords`] on the Γ₀ generators: Π gen_i^{c_i}.
    pub fn element_from_marked_coords(&self, c: &Coords) -> Result<Element, GroupError> {
        match (&self.kind, &self.marked) {
            (Kind::Free { .. }, Marked::FreeCyclic { conj, root, step }) => {
                let g = Element::Word(free_cyclic_element(conj, root, *step));
                self.power(&g, c.free[0])
            }
            (Kind::Abelian { invariants }, _) => {
                let (mut fi, mut ti) = (c.free.iter(), c.torsion.iter());
                let v = invariants
                    .iter()
                    .map(|&d| {
                        if d == 0 {
                            *fi.next().unwrap_or(&0)
                        } else {
                            ti.next().unwrap_or(&0).rem_euclid(d as i64)
                        }
                    })
                    .collect();
                Ok(Element::Abelian(v))
            }
            (Kind::Semidirect { matrix, .. }, Marked::ActingZ) => {
                Ok(Element::Semidirect(vec![BigInt::zero(); matrix.dim()], c.free[0]))
            }
            (Kind::Semidirect { .. }, Marked::Normal) => {
                Ok(Element::Semidirect(c.free.iter().map(|&x| BigInt::from(x)).collect(), 0))
            }
            (Kind::DirectProduct(f), Marked::Product) => {
                let (mut fo, mut to) = (0, 0);
                let mut parts = Vec::new();
                for m in f {
                    let s = m.marked_shape();
                    let sub = Coords {
                        free: c.free[fo..fo + s.free].to_vec(),
                        torsion: c.torsion[to..to + s.torsion.len()].to_vec(),
                    };
                    fo += s.free;
                    to += s.torsion.len();
                    parts.push(m.element_from_marked_coords(&sub)?);
                }
                Ok(Element::Tuple(parts))
            }
            (Kind::FreeProduct(f), Marked::Factor(i)) => {
                let e = f[*i].element_from_marked_coords(c)?;
                if f[*i].is_identity(&e)? {
                    Ok(Element::FreeProd(vec![]))
                } else {
                    Ok(Element::FreeProd(vec![(*i, e)]))
                }
            }
            (Kind::Free { .. }, Marked::Whole) if c.free.len() <= 1 => {
                Ok(Element::Word(word::power(&[1], c.free.first().copied().unwrap_or(0))))
            }
            (_, Marked::Trivial) => Ok(self.identity()),
            _ => Err(GroupError::MixedModel),
        }
    }
}

fn bfs_layers(model: &GroupModel, gens: &[Element], radius: usize, budget: usize) -> Result<Vec<Vec<Element>>, GroupError> {
    let id = model.identity();
    let mut seen: BTreeSet<Element> = BTreeSet::new();
    seen.insert(id.clone());
    let mut layers = vec![vec![id]];
    for _ in 0..radius {
        let mut next = Vec::new();
        for g in layers.last().unwrap() {
            for s in gens {
                let h = model.multiply(g, s)?;
                if seen.insert(h.clone()) {
                    if seen.len() > budget {
                        return Err(GroupError::BudgetExceeded { budget });
                    }
                    next.push(h);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        layers.push(next);
    }
    Ok(layers)
}

fn lattice_rows(l: &Lattice) -> Vec<Vec<BigInt>> {
    l.basis().to_vec()
}

pub(crate) fn free_cyclic_element(conj: &[i32], root: &[i32], step: i64) -> Word {
    word::multiply(&word::multiply(conj, &word::power(root, step)), &word::invert(conj))
}

/// Γ₀ = ⟨gens⟩ in a free group; the words must be powers of a common conjugate root.
pub fn free_marked(gens: &[Word]) -> Result<Marked, GroupError> {
    let nontrivial: Vec<&Word> = gens.iter().filter(|w| !w.is_empty()).collect();
    let Some(first) = nontrivial.first() else {
        return Ok(Marked::Trivial);
    };
    let (conj, core) = word::conjugate_form(first);
    let (root, _) = word::primitive_root(&core);
    let mut step: i64 = 0;
    for w in &nontrivial {
        let inner = word::multiply(&word::multiply(&word::invert(&conj), w), &conj);
        let k = word::exponent_in(&inner, &root).ok_or_else(|| {
            GroupError::NonAbelianMarked(format!("{} does not commute with {}", word::format_word(w), word::format_word(first)))
        })?;
        step = num_integer::gcd(step, k);
    }
    Ok(Marked::FreeCyclic { conj, root, step })
}

/// Γ₀ generated by `gens` inside ℤ^{#0} × Π ℤ/d.
pub fn abelian_marked(invariants: &[u64], gens: &[Vec<i64>]) -> Result<Marked, GroupError> {
    let n = invariants.len();
    if let Some(g) = gens.iter().find(|g| g.len() != n) {
        return Err(GroupError::InvalidModel(format!("marked generator {g:?} has the wrong length")));
    }
    let mut all: Vec<Vec<i64>> = gens.to_vec();
    for (i, &d) in invariants.iter().enumerate() {
        if d != 0 {
            let mut v = vec![0i64; n];
            v[i] = d as i64;
            all.push(v);
        }
    }
    Ok(Marked::Lattice(Lattice::from_i64(n, &all)))
}

#[cfg(test)]
mod tests;
