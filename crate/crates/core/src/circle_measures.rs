//! Measures on the circle [0,1) and their Fourier diagnostics.
//!
//! A [`CircleMeasure`] is a finite sum of atoms, an optional density sampled on
//! a uniform grid and an optional Riesz product. Coefficients use the
//! convention μ̂(n) = ∫ e^{2πint} dμ(t).

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

use crate::scalar::Scalar;

pub const DEFAULT_GRID: usize = 1 << 14;
pub const DEFAULT_HORIZON: usize = 10_000;
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum MeasureError {
    #[error("atom point {0} is not in [0,1)")]
    PointOutOfRange(String),
    #[error("atom mass {0} must be finite and strictly positive")]
    BadMass(f64),
    #[error("grid size {0} is not a power of two")]
    GridNotPowerOfTwo(usize),
    #[error("density grid declared as {declared} but {actual} samples given")]
    GridMismatch { declared: usize, actual: usize },
    #[error("density sample {index} is {value}; samples must be finite and nonnegative")]
    BadSample { index: usize, value: f64 },
    #[error("riesz frequencies must be positive with n_(j+1) >= 3 n_j + 1 (violated at index {0})")]
    NotDissociate(usize),
    #[error("riesz coefficient {0} has modulus above 1")]
    RieszCoefficient(f64),
    #[error("riesz spec has {freqs} frequencies but {coeffs} coefficients")]
    RieszLength { freqs: usize, coeffs: usize },
    #[error("sequence value {value} at index {index} exceeds declared bound {bound}")]
    BoundViolated { index: i64, value: f64, bound: f64 },
    #[error("invalid horizon: {0}")]
    Horizon(String),
    #[error("cannot parse point {0:?}")]
    PointParse(String),
}

/// A point of the circle, exact when given as a fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point {
    Rational(Rational64),
    Float(f64),
}

impl Point {
    pub fn rational(p: i64, q: i64) -> Point {
        Point::Rational(Rational64::new(p, q))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Point::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
            Point::Float(x) => *x,
        }
    }

    fn validate(&self) -> Result<(), MeasureError> {
        let ok = match self {
            Point::Rational(r) => !r.is_negative() && *r < Rational64::from_integer(1),
            Point::Float(x) => x.is_finite() && (0.0..1.0).contains(x),
        };
        if ok {
            Ok(())
        } else {
            Err(MeasureError::PointOutOfRange(self.to_string()))
        }
    }

    /// e^{2πint}, with the phase reduced exactly for rational points.
    pub fn character(&self, n: i64) -> Complex64 {
        match self {
            Point::Rational(r) => {
                let q = *r.denom() as i128;
                let k = (n as i128 * *r.numer() as i128).rem_euclid(q);
                Complex64::root_of_unity(k as i64, q as i64).unwrap_or_default()
            }
            Point::Float(x) => Complex64::from_polar(1.0, TAU * (n as f64 * x).rem_euclid(1.0)),
        }
    }

    fn same_as(&self, other: &Point) -> bool {
        match (self, other) {
            (Point::Rational(a), Point::Rational(b)) => a == b,
            _ => self.to_f64() == other.to_f64(),
        }
    }
}

impl std::fmt::Display for Point {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Point::Rational(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Point::Float(x) => write!(f, "{x}"),
        }
    }
}

impl std::str::FromStr for Point {
    type Err = MeasureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let err = || MeasureError::PointParse(s.to_string());
        if let Some((p, q)) = t.split_once('/') {
            let p: i64 = p.trim().parse().map_err(|_| err())?;
            let q: i64 = q.trim().parse().map_err(|_| err())?;
            if q == 0 {
                return Err(err());
            }
            Ok(Point::rational(p, q))
        } else if let Ok(k) = t.parse::<i64>() {
            Ok(Point::Rational(Rational64::from_integer(k)))
        } else {
            t.parse::<f64>().map(Point::Float).map_err(|_| err())
        }
    }
}

/// Nonnegative density sampled on a uniform grid of power-of-two size.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    samples: Vec<f64>,
}

impl Density {
    pub fn new(samples: Vec<f64>) -> Result<Self, MeasureError> {
        let g = samples.len();
        if g == 0 || !g.is_power_of_two() {
            return Err(MeasureError::GridNotPowerOfTwo(g));
        }
        if let Some((index, &value)) = samples
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(MeasureError::BadSample { index, value });
        }
        Ok(Density { samples })
    }

    /// Constant density with the given total mass.
    pub fn uniform(grid: usize, mass: f64) -> Result<Self, MeasureError> {
        Density::new(vec![mass; grid])
    }

    /// Samples `f` at the grid points j/G.
    pub fn from_fn(grid: usize, f: impl Fn(f64) -> f64) -> Result<Self, MeasureError> {
        Density::new((0..grid).map(|j| f(j as f64 / grid as f64)).collect())
    }

    pub fn grid(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn mass(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.grid() as f64
    }

    /// Equal-weight quadrature below the Nyquist index, zero from there on.
    pub fn coefficient(&self, n: i64) -> Complex64 {
        let g = self.grid() as i64;
        if 2 * n.abs() >= g {
            return Complex64::zero();
        }
        let sum: Complex64 = self
            .samples
            .iter()
            .enumerate()
            .map(|(j, &s)| s * Complex64::from_polar(1.0, TAU * ((n * j as i64).rem_euclid(g)) as f64 / g as f64))
            .sum();
        sum / g as f64
    }

    /// Coefficients for |n| ≤ N via one FFT, indexed by n + N.
    pub fn coefficients(&self, horizon: usize) -> Vec<Complex64> {
        let g = self.grid();
        let mut buf: Vec<Complex64> = self.samples.iter().map(|&s| Complex64::new(s, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(g).process(&mut buf);
        let n = horizon as i64;
        (-n..=n)
            .map(|k| {
                if 2 * k.unsigned_abs() as usize >= g {
                    Complex64::zero()
                } else {
                    // forward FFT uses e^{-2πijk/G}, so index −k gives e^{+2πijk/G}
                    buf[(-k).rem_euclid(g as i64) as usize] / g as f64
                }
            })
            .collect()
    }
}

/// Riesz product Π(1 + a_j cos 2πn_j t) dt on dissociate frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct RieszSpec {
    freqs: Vec<i64>,
    coeffs: Vec<f64>,
}

impl RieszSpec {
    pub fn new(freqs: Vec<i64>, coeffs: Vec<f64>) -> Result<Self, MeasureError> {
        if freqs.len() != coeffs.len() {
            return Err(MeasureError::RieszLength {
                freqs: freqs.len(),
                coeffs: coeffs.len(),
            });
        }
        for (j, &n) in freqs.iter().enumerate() {
            let ok = if j == 0 { n >= 1 } else { n >= 3 * freqs[j - 1] + 1 };
            if !ok {
                return Err(MeasureError::NotDissociate(j));
            }
        }
        if let Some(&a) = coeffs.iter().find(|a| !a.is_finite() || a.abs() > 1.0) {
            return Err(MeasureError::RieszCoefficient(a));
        }
        Ok(RieszSpec { freqs, coeffs })
    }

    pub fn freqs(&self) -> &[i64] {
        &self.freqs
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Signs ε_j with n = Σ ε_j n_j, if such a representation exists.
    pub fn representation(&self, n: i64) -> Option<Vec<i8>> {
        let mut prefix = vec![0i64; self.freqs.len() + 1];
        for (j, &f) in self.freqs.iter().enumerate() {
            prefix[j + 1] = prefix[j] + f;
        }
        let mut eps = vec![0i8; self.freqs.len()];
        let mut r = n;
        for j in (0..self.freqs.len()).rev() {
            if r.abs() > prefix[j] {
                let s = r.signum();
                eps[j] = s as i8;
                r -= s * self.freqs[j];
            }
        }
        (r == 0).then_some(eps)
    }

    pub fn coefficient(&self, n: i64) -> f64 {
        match self.representation(n) {
            Some(eps) => eps
                .iter()
                .zip(&self.coeffs)
                .filter(|(e, _)| **e != 0)
                .map(|(_, a)| a / 2.0)
                .product(),
            None => 0.0,
        }
    }

    /// Largest frequency carrying a nonzero coefficient.
    pub fn degree(&self) -> i64 {
        self.freqs.iter().sum()
    }
}

/// Atoms plus optional density plus optional Riesz product.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CircleMeasure {
    atoms: Vec<(Point, f64)>,
    density: Option<Density>,
    riesz: Option<RieszSpec>,
}

impl CircleMeasure {
    /// Validates the parts and merges coincident atoms.
    pub fn new(
        atoms: Vec<(Point, f64)>,
        density: Option<Density>,
        riesz: Option<RieszSpec>,
    ) -> Result<Self, MeasureError> {
        let mut merged: Vec<(Point, f64)> = Vec::with_capacity(atoms.len());
        for (p, m) in atoms {
            p.validate()?;
            if !m.is_finite() || m <= 0.0 {
                return Err(MeasureError::BadMass(m));
            }
            match merged.iter_mut().find(|(q, _)| q.same_as(&p)) {
                Some(slot) => slot.1 += m,
                None => merged.push((p, m)),
            }
        }
        Ok(CircleMeasure {
            atoms: merged,
            density,
            riesz,
        })
    }

    pub fn dirac(point: Point, mass: f64) -> Result<Self, MeasureError> {
        CircleMeasure::new(vec![(point, mass)], None, None)
    }

    pub fn lebesgue() -> Self {
        CircleMeasure {
            atoms: vec![],
            density: Some(Density { samples: vec![1.0; DEFAULT_GRID] }),
            riesz: None,
        }
    }

    pub fn riesz_product(spec: RieszSpec) -> Self {
        CircleMeasure {
            atoms: vec![],
            density: None,
            riesz: Some(spec),
        }
    }

    pub fn atoms(&self) -> &[(Point, f64)] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&Density> {
        self.density.as_ref()
    }

    pub fn riesz(&self) -> Option<&RieszSpec> {
        self.riesz.as_ref()
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|(_, m)| m).sum()
    }

    /// Σ mass² over atoms, the limit of the Wiener estimator.
    pub fn atom_energy(&self) -> f64 {
        self.atoms.iter().map(|(_, m)| m * m).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.atom_mass()
            + self.density.as_ref().map_or(0.0, Density::mass)
            + if self.riesz.is_some() { 1.0 } else { 0.0 }
    }

    pub fn fourier_coefficient(&self, n: i64) -> Complex64 {
        let atoms: Complex64 = self.atoms.iter().map(|(p, m)| *m * p.character(n)).sum();
        let dens = self.density.as_ref().map_or(Complex64::zero(), |d| d.coefficient(n));
        let riesz = self.riesz.as_ref().map_or(0.0, |r| r.coefficient(n));
        atoms + dens + riesz
    }

    /// μ̂(n) for −N ≤ n ≤ N, indexed by n + N.
    pub fn coefficients(&self, horizon: usize) -> Vec<Complex64> {
        let n = horizon as i64;
        let mut out: Vec<Complex64> = (-n..=n)
            .into_par_iter()
            .map(|k| {
                let atoms: Complex64 = self.atoms.iter().map(|(p, m)| *m * p.character(k)).sum();
                atoms + self.riesz.as_ref().map_or(0.0, |r| r.coefficient(k))
            })
            .collect();
        if let Some(d) = &self.density {
            for (o, c) in out.iter_mut().zip(d.coefficients(horizon)) {
                *o += c;
            }
        }
        out
    }

    pub fn to_doc(&self) -> MeasureDoc {
        MeasureDoc {
            atoms: self
                .atoms
                .iter()
                .map(|(p, m)| {
                    let repr = match p {
                        Point::Rational(_) => PointRepr::Text(p.to_string()),
                        Point::Float(x) => PointRepr::Number(*x),
                    };
                    (repr, *m)
                })
                .collect(),
            density: self.density.as_ref().map(|d| DensityDoc {
                grid: d.grid(),
                samples: d.samples.clone(),
            }),
            riesz: self.riesz.as_ref().map(|r| RieszDoc {
                freqs: r.freqs.clone(),
                coeffs: r.coeffs.clone(),
            }),
        }
    }

    pub fn from_doc(doc: MeasureDoc) -> Result<Self, MeasureError> {
        let atoms = doc
            .atoms
            .into_iter()
            .map(|(p, m)| {
                let point = match p {
                    PointRepr::Number(x) => Point::Float(x),
                    PointRepr::Text(s) => s.parse()?,
                };
                Ok((point, m))
            })
            .collect::<Result<Vec<_>, MeasureError>>()?;
        let density = match doc.density {
            Some(d) => {
                if d.grid != d.samples.len() {
                    return Err(MeasureError::GridMismatch {
                        declared: d.grid,
                        actual: d.samples.len(),
                    });
                }
                Some(Density::new(d.samples)?)
            }
            None => None,
        };
        let riesz = doc.riesz.map(|r| RieszSpec::new(r.freqs, r.coeffs)).transpose()?;
        CircleMeasure::new(atoms, density, riesz)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointRepr {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityDoc {
    pub grid: usize,
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RieszDoc {
    pub freqs: Vec<i64>,
    pub coeffs: Vec<f64>,
}

/// JSON form of a [`CircleMeasure`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MeasureDoc {
    #[serde(default)]
    pub atoms: Vec<(PointRepr, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub riesz: Option<RieszDoc>,
}

/// Coefficients on |n| ≤ N with running Cesàro means and the tail supremum.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierProfile {
    pub horizon: usize,
    pub tail_start: usize,
    /// μ̂(n) for n = −N..=N, indexed by n + N.
    pub coefficients: Vec<Complex64>,
    /// Index N' ↦ (1/(2N'+1)) Σ_{|k|≤N'} |μ̂(k)|².
    pub cesaro_sq: Vec<f64>,
    /// Index N' ↦ (1/(2N'+1)) Σ_{|k|≤N'} |μ̂(k)|.
    pub cesaro_abs: Vec<f64>,
    pub tail_sup: f64,
    /// Positive n in the tail where the supremum is attained.
    pub tail_argmax: Vec<i64>,
}

impl FourierProfile {
    /// Builds a profile from coefficients indexed by n + N.
    pub fn from_coefficients(coefficients: Vec<Complex64>, tail_start: usize) -> Self {
        let horizon = (coefficients.len() - 1) / 2;
        let c = |n: i64| coefficients[(n + horizon as i64) as usize];
        let mut cesaro_sq = Vec::with_capacity(horizon + 1);
        let mut cesaro_abs = Vec::with_capacity(horizon + 1);
        let (mut sq, mut ab) = (0.0, 0.0);
        for k in 0..=horizon as i64 {
            let terms: &[i64] = if k == 0 { &[0] } else { &[k, -k] };
            for &t in terms {
                let a = c(t).norm();
                sq += a * a;
                ab += a;
            }
            let denom = (2 * k + 1) as f64;
            cesaro_sq.push(sq / denom);
            cesaro_abs.push(ab / denom);
        }
        let tail = tail_start as i64..=horizon as i64;
        let tail_sup = tail
            .clone()
            .flat_map(|n| [c(n).norm(), c(-n).norm()])
            .fold(0.0, f64::max);
        let tail_argmax = if tail_sup > 0.0 {
            tail.filter(|&n| (c(n).norm().max(c(-n).norm()) - tail_sup).abs() <= 1e-12 * tail_sup.max(1.0))
                .collect()
        } else {
            vec![]
        };
        FourierProfile {
            horizon,
            tail_start,
            coefficients,
            cesaro_sq,
            cesaro_abs,
            tail_sup,
            tail_argmax,
        }
    }

    pub fn coefficient(&self, n: i64) -> Complex64 {
        self.coefficients[(n + self.horizon as i64) as usize]
    }

    /// CSV with columns n, re, im, abs.
    pub fn to_csv(&self) -> String {
        use crate::format::fmt_sig;
        let mut out = String::from("n,re,im,abs\n");
        for (i, c) in self.coefficients.iter().enumerate() {
            let n = i as i64 - self.horizon as i64;
            out.push_str(&format!("{n},{},{},{}\n", fmt_sig(c.re), fmt_sig(c.im), fmt_sig(c.norm())));
        }
        out
    }
}

fn check_horizon(n: usize) -> Result<(), MeasureError> {
    if n == 0 {
        Err(MeasureError::Horizon("N must be at least 1".into()))
    } else {
        Ok(())
    }
}

pub fn fourier_coefficient(mu: &CircleMeasure, n: i64) -> Complex64 {
    mu.fourier_coefficient(n)
}

/// Cesàro means of |μ̂|² for N' = 0..=N; the last value estimates Σ mass².
pub fn wiener_atom_energy(mu: &CircleMeasure, n: usize) -> Result<Vec<f64>, MeasureError> {
    check_horizon(n)?;
    Ok(FourierProfile::from_coefficients(mu.coefficients(n), 1).cesaro_sq)
}

pub fn rajchman_profile(mu: &CircleMeasure, n0: usize, n: usize) -> Result<FourierProfile, MeasureError> {
    if n0 == 0 || n0 >= n {
        return Err(MeasureError::Horizon(format!("need 0 < N0 < N, got N0={n0}, N={n}")));
    }
    Ok(FourierProfile::from_coefficients(mu.coefficients(n), n0))
}

/// Cesàro means of |μ̂| for N' = 0..=N.
pub fn weak_mixing_profile(mu: &CircleMeasure, n: usize) -> Result<Vec<f64>, MeasureError> {
    check_horizon(n)?;
    Ok(FourierProfile::from_coefficients(mu.coefficients(n), 1).cesaro_abs)
}

/// (Cesàro |a_k|, Cesàro |a_k|²) over |k| ≤ N, rejecting values above `bound`.
pub fn cesaro_equivalence_check(
    a: impl Fn(i64) -> f64,
    bound: f64,
    n: usize,
) -> Result<(f64, f64), MeasureError> {
    let n = n as i64;
    let (mut s1, mut s2) = (0.0, 0.0);
    for k in -n..=n {
        let v = a(k).abs();
        if !(v <= bound) {
            return Err(MeasureError::BoundViolated {
                index: k,
                value: v,
                bound,
            });
        }
        s1 += v;
        s2 += v * v;
    }
    let d = (2 * n + 1) as f64;
    Ok((s1 / d, s2 / d))
}
