use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::BimoduleError;
use crate::circle_measures::{rajchman_profile, CircleMeasure, Point};
use crate::Scalar;

/// Complex measure on X × X with X = {0, …, size − 1}, stored by support.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateMeasure<S: Scalar = Complex64> {
    size: usize,
    masses: BTreeMap<(usize, usize), S>,
    circle: Option<Vec<Point>>,
}

impl<S: Scalar> BivariateMeasure<S> {
    pub fn zero(size: usize) -> Self {
        BivariateMeasure {
            size,
            masses: BTreeMap::new(),
            circle: None,
        }
    }

    /// Sums repeated points and drops zero masses.
    pub fn from_points(size: usize, points: impl IntoIterator<Item = ((usize, usize), S)>) -> Result<Self, BimoduleError> {
        let mut m = Self::zero(size);
        for ((t, s), c) in points {
            m.add_mass(t, s, c)?;
        }
        Ok(m)
    }

    pub fn add_mass(&mut self, t: usize, s: usize, c: S) -> Result<(), BimoduleError> {
        if t >= self.size || s >= self.size {
            return Err(BimoduleError::Size(format!("point ({t},{s}) outside X of size {}", self.size)));
        }
        let slot = self.masses.entry((t, s)).or_insert_with(S::zero);
        *slot = slot.clone() + c;
        if slot.is_zero() {
            self.masses.remove(&(t, s));
        }
        Ok(())
    }

    /// Declares an embedding of X into the circle, one point per element.
    pub fn with_circle(mut self, circle: Vec<Point>) -> Result<Self, BimoduleError> {
        if circle.len() != self.size {
            return Err(BimoduleError::Size(format!("{} circle points for |X| = {}", circle.len(), self.size)));
        }
        self.circle = Some(circle);
        Ok(self)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn circle(&self) -> Option<&[Point]> {
        self.circle.as_deref()
    }

    pub fn masses(&self) -> &BTreeMap<(usize, usize), S> {
        &self.masses
    }

    pub fn mass(&self, t: usize, s: usize) -> S {
        self.masses.get(&(t, s)).cloned().unwrap_or_else(S::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn total_mass(&self) -> S {
        self.masses.values().fold(S::zero(), |a, c| a + c.clone())
    }

    pub fn total_variation(&self) -> f64 {
        self.masses.values().map(|c| c.to_c64().norm()).sum()
    }

    /// Pushforward under the coordinate projection of `axis`.
    pub fn marginal(&self, axis: Axis) -> Vec<S> {
        let mut out = vec![S::zero(); self.size];
        for (&(t, s), c) in &self.masses {
            let i = match axis {
                Axis::First => t,
                Axis::Second => s,
            };
            out[i] = out[i].clone() + c.clone();
        }
        out
    }

    /// θ_*η with θ(t, s) = (s, t).
    pub fn flip(&self) -> Self {
        BivariateMeasure {
            size: self.size,
            masses: self.masses.iter().map(|(&(t, s), c)| ((s, t), c.clone())).collect(),
            circle: self.circle.clone(),
        }
    }

    /// θ_*η ≪ η ≪ θ_*η, i.e. the support is invariant under the flip.
    pub fn flip_equivalent(&self) -> bool {
        self.masses.keys().all(|&(t, s)| self.masses.contains_key(&(s, t)))
    }

    /// (η + θ_*η)/2.
    pub fn symmetrize(&self) -> Self {
        let half = S::one() / S::from_i64(2);
        self.add(&self.flip()).scale(&half)
    }

    pub fn scale(&self, c: &S) -> Self {
        let mut out = Self::zero(self.size);
        out.circle = self.circle.clone();
        for (&k, m) in &self.masses {
            let v = m.clone() * c.clone();
            if !v.is_zero() {
                out.masses.insert(k, v);
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&(t, s), c) in &other.masses {
            // sizes agree for every caller; larger supports are still kept
            out.size = out.size.max(other.size);
            let _ = out.add_mass(t, s, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-S::one()))
    }

    /// ∫ f dη.
    pub fn integrate(&self, f: impl Fn(usize, usize) -> S) -> S {
        self.masses
            .iter()
            .fold(S::zero(), |a, (&(t, s), c)| a + c.clone() * f(t, s))
    }

    pub fn map_scalars<T: Scalar>(&self, f: impl Fn(&S) -> T) -> BivariateMeasure<T> {
        BivariateMeasure {
            size: self.size,
            masses: self
                .masses
                .iter()
                .map(|(&k, c)| (k, f(c)))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
            circle: self.circle.clone(),
        }
    }

    pub fn to_c64(&self) -> BivariateMeasure<Complex64> {
        self.map_scalars(|c| c.to_c64())
    }

    /// max |η(t,s) − ζ(t,s)| over the union of supports.
    pub fn max_defect(&self, other: &Self) -> f64 {
        self.sub(other)
            .masses
            .values()
            .map(|c| c.to_c64().norm())
            .fold(0.0, f64::max)
    }

    pub fn to_doc(&self) -> MeasureJson {
        MeasureJson {
            size: Some(self.size),
            circle: self.circle.as_ref().map(|c| c.iter().map(|p| p.to_string()).collect()),
            points: self
                .masses
                .iter()
                .map(|(&(t, s), c)| {
                    let z = c.to_c64();
                    (t, s, z.re, z.im)
                })
                .collect(),
        }
    }
}

impl BivariateMeasure<Complex64> {
    pub fn from_doc(doc: MeasureJson) -> Result<Self, BimoduleError> {
        let size = doc
            .size
            .unwrap_or_else(|| doc.points.iter().map(|p| p.0.max(p.1) + 1).max().unwrap_or(0));
        let mut m = Self::from_points(size, doc.points.into_iter().map(|(t, s, re, im)| ((t, s), Complex64::new(re, im))))?;
        if let Some(c) = doc.circle {
            let pts = c
                .iter()
                .map(|s| s.parse::<Point>().map_err(|e| BimoduleError::Parse(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            m = m.with_circle(pts)?;
        }
        Ok(m)
    }
}

/// JSON form `{"points":[[t,s,re,im],…]}` with optional size and circle embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circle: Option<Vec<String>>,
    pub points: Vec<(usize, usize, f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    First,
    Second,
}

impl Axis {
    pub fn from_index(i: u8) -> Option<Axis> {
        match i {
            1 => Some(Axis::First),
            2 => Some(Axis::Second),
            _ => None,
        }
    }

    fn pick(self, t: usize, s: usize) -> usize {
        match self {
            Axis::First => t,
            Axis::Second => s,
        }
    }
}

/// Base measure of a disintegration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Base {
    /// Coordinate pushforward; fibers are conditional probabilities.
    Pushforward,
    /// Normalized counting measure on X.
    Haar,
}

/// Fibers of a measure on X × X over one coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct DisintegrationFibers<S: Scalar = Complex64> {
    pub axis: Axis,
    pub base_kind: Base,
    pub base: Vec<S>,
    /// Nonzero fibers; fiber t is concentrated on the slice through t.
    pub fibers: BTreeMap<usize, BivariateMeasure<S>>,
    pub circle: Option<Vec<Point>>,
}

/// Disintegrates β over the coordinate `axis`.
pub fn disintegrate<S: Scalar>(
    beta: &BivariateMeasure<S>,
    axis: Axis,
    base_kind: Base,
) -> Result<DisintegrationFibers<S>, BimoduleError> {
    let n = beta.size;
    let base = match base_kind {
        Base::Pushforward => beta.marginal(axis),
        Base::Haar => vec![S::one() / S::from_i64(n as i64); n],
    };
    let mut fibers: BTreeMap<usize, BivariateMeasure<S>> = BTreeMap::new();
    for (&(t, s), c) in &beta.masses {
        let i = axis.pick(t, s);
        if base[i].is_zero() {
            return Err(BimoduleError::ZeroBase(i));
        }
        let fiber = fibers.entry(i).or_insert_with(|| {
            let mut f = BivariateMeasure::zero(n);
            f.circle = beta.circle.clone();
            f
        });
        fiber.add_mass(t, s, c.clone() / base[i].clone())?;
    }
    fibers.retain(|_, f| !f.is_zero());
    Ok(DisintegrationFibers {
        axis,
        base_kind,
        base,
        fibers,
        circle: beta.circle.clone(),
    })
}

impl<S: Scalar> DisintegrationFibers<S> {
    /// Σ_t μ(t)·fiber_t as a measure on X × X.
    pub fn reconstruct(&self) -> BivariateMeasure<S> {
        let n = self.base.len();
        let mut out = BivariateMeasure::zero(n);
        for (&t, f) in &self.fibers {
            out = out.add(&f.scale(&self.base[t]));
        }
        out.circle = self.circle.clone();
        out
    }

    /// fiber_t(X × X) for every t, zero where the fiber vanishes.
    pub fn fiber_totals(&self) -> Vec<S> {
        let mut out = vec![S::zero(); self.base.len()];
        for (&t, f) in &self.fibers {
            out[t] = f.total_mass();
        }
        out
    }

    /// Every fiber is concentrated on its slice.
    pub fn concentrated(&self) -> bool {
        self.fibers
            .iter()
            .all(|(&i, f)| f.masses.keys().all(|&(t, s)| self.axis.pick(t, s) == i))
    }
}

/// Distribution over fibers of the tail supremum of Fourier coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberProfileSummary {
    pub horizon: usize,
    pub tail_start: usize,
    /// (fiber index, tail_sup).
    pub tail_sups: Vec<(usize, f64)>,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

/// Runs the Rajchman profile on each fiber, read as a measure on the circle
/// through the free coordinate.
pub fn fiber_mixing_profile<S: Scalar>(
    fibers: &DisintegrationFibers<S>,
    tail_start: usize,
    horizon: usize,
) -> Result<FiberProfileSummary, BimoduleError> {
    let mut tail_sups = Vec::with_capacity(fibers.fibers.len());
    for (&i, f) in &fibers.fibers {
        let circle = f.circle.as_ref().ok_or(BimoduleError::NoCircleEmbedding)?;
        let mut atoms = Vec::new();
        for (&(t, s), c) in &f.masses {
            let z = c.to_c64();
            if z.im.abs() > 1e-12 || z.re < -1e-12 {
                return Err(BimoduleError::NotPositive(i));
            }
            if z.re > 0.0 {
                let free = if fibers.axis == Axis::First { s } else { t };
                atoms.push((circle[free].clone(), z.re));
            }
        }
        let mu = CircleMeasure::new(atoms, None, None).map_err(|e| BimoduleError::Parse(e.to_string()))?;
        let p = rajchman_profile(&mu, tail_start, horizon).map_err(|e| BimoduleError::Parse(e.to_string()))?;
        tail_sups.push((i, p.tail_sup));
    }
    let vals: Vec<f64> = tail_sups.iter().map(|x| x.1).collect();
    let (min, max, mean) = if vals.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        (
            vals.iter().copied().fold(f64::INFINITY, f64::min),
            vals.iter().copied().fold(0.0, f64::max),
            vals.iter().sum::<f64>() / vals.len() as f64,
        )
    };
    Ok(FiberProfileSummary {
        horizon,
        tail_start,
        tail_sups,
        min,
        max,
        mean,
    })
}

/// Result of the polarization and domination checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolarizationReport {
    /// max |4η₁₂ − (η₊ − η₋) − i(η₊ᵢ − η₋ᵢ)|.
    pub identity_defect: f64,
    /// max (|η₁₂| − η₁ − η₂)⁺ over support points.
    pub domination_violation: f64,
}

impl PolarizationReport {
    pub fn max_defect(&self) -> f64 {
        self.identity_defect.max(self.domination_violation)
    }
}

/// Checks 4η₁₂ = (η₊ − η₋) + i(η₊ᵢ − η₋ᵢ) and |η₁₂| ≤ η₁ + η₂ pointwise.
#[allow(clippy::too_many_arguments)]
pub fn polarization_check(
    eta12: &BivariateMeasure<Complex64>,
    eta1: &BivariateMeasure<Complex64>,
    eta2: &BivariateMeasure<Complex64>,
    plus: &BivariateMeasure<Complex64>,
    minus: &BivariateMeasure<Complex64>,
    plus_i: &BivariateMeasure<Complex64>,
    minus_i: &BivariateMeasure<Complex64>,
) -> PolarizationReport {
    let i = Complex64::new(0.0, 1.0);
    let rhs = plus.sub(minus).add(&plus_i.sub(minus_i).scale(&i));
    let identity_defect = eta12.scale(&Complex64::new(4.0, 0.0)).max_defect(&rhs);
    let domination_violation = eta12
        .masses
        .iter()
        .map(|(&(t, s), c)| c.norm() - eta1.mass(t, s).re - eta2.mass(t, s).re)
        .fold(0.0, f64::max);
    PolarizationReport {
        identity_defect,
        domination_violation,
    }
}
