//! Cutting-and-stacking rank-one towers.
//!
//! Stage 0 is the unit interval. At stage k the stack is cut into r_k columns
//! of equal width, s_{k,j} spacers are placed on column j and the columns are
//! stacked left to right. Every interval of the stage-K tower has width
//! w_K = 1/(r_1⋯r_K), so levels are stored as integer offsets in units of w_K.
//! Since r_1⋯r_K ≤ h_K, these offsets are exact for any tower within budget.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circle_measures::FourierProfile;

#[derive(Debug, Error, PartialEq)]
pub enum RankOneError {
    #[error("stage {stage} would need {predicted} intervals, above the budget of {budget}")]
    BudgetExceeded { stage: usize, predicted: u128, budget: usize },
    #[error("orbit escapes tower: level {level} + {m} is outside height {height}")]
    EscapesTower { level: usize, m: i64, height: usize },
    #[error("point {0} is not in the stacked region")]
    OutsideTower(String),
    #[error("horizon {requested} exceeds the definable maximum {max}")]
    Horizon { requested: usize, max: usize },
    #[error("invalid cut/spacer spec: {0}")]
    InvalidSpec(String),
    #[error("function has {got} values but the tower has {height} levels")]
    LengthMismatch { got: usize, height: usize },
    #[error("function is not mean-zero (mean {0})")]
    NotMeanZero(f64),
}

/// Cut counts and spacer arrays for stages 1, 2, ….
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutSpacerSpec {
    pub cuts: Vec<usize>,
    pub spacers: Vec<Vec<u64>>,
}

impl CutSpacerSpec {
    pub fn new(cuts: Vec<usize>, spacers: Vec<Vec<u64>>) -> Result<Self, RankOneError> {
        let spec = CutSpacerSpec { cuts, spacers };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), RankOneError> {
        if self.cuts.len() != self.spacers.len() {
            return Err(RankOneError::InvalidSpec(format!(
                "{} cut counts but {} spacer arrays",
                self.cuts.len(),
                self.spacers.len()
            )));
        }
        for (k, (&r, s)) in self.cuts.iter().zip(&self.spacers).enumerate() {
            if r == 0 {
                return Err(RankOneError::InvalidSpec(format!("stage {} has zero columns", k + 1)));
            }
            if s.len() != r {
                return Err(RankOneError::InvalidSpec(format!(
                    "stage {} has {r} columns but {} spacer counts",
                    k + 1,
                    s.len()
                )));
            }
        }
        Ok(())
    }

    /// Staircase: stage k cuts into k columns with j spacers on column j.
    pub fn staircase(stages: usize) -> Self {
        CutSpacerSpec {
            cuts: (1..=stages).collect(),
            spacers: (1..=stages).map(|k| (1..=k as u64).collect()).collect(),
        }
    }

    pub fn stages(&self) -> usize {
        self.cuts.len()
    }

    /// Heights h_0..=h_K from the recurrence h_k = r_k h_{k−1} + Σ_j s_{k,j}.
    pub fn heights(&self, k: usize) -> Vec<u128> {
        let mut h = vec![1u128];
        for stage in 0..k.min(self.stages()) {
            let prev = *h.last().unwrap();
            let s: u128 = self.spacers[stage].iter().map(|&x| x as u128).sum();
            h.push(prev.saturating_mul(self.cuts[stage] as u128).saturating_add(s));
        }
        h
    }
}

/// JSON input: either an explicit spec or a named preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecDoc {
    Preset {
        preset: String,
    },
    Explicit(CutSpacerSpec),
}

impl SpecDoc {
    pub fn resolve(&self, stages: usize) -> Result<CutSpacerSpec, RankOneError> {
        match self {
            SpecDoc::Preset { preset } if preset == "staircase" => Ok(CutSpacerSpec::staircase(stages)),
            SpecDoc::Preset { preset } => Err(RankOneError::InvalidSpec(format!("unknown preset {preset:?}"))),
            SpecDoc::Explicit(s) => {
                s.validate()?;
                Ok(s.clone())
            }
        }
    }
}

/// Stage-K tower with levels stored bottom to top.
#[derive(Debug, Clone, PartialEq)]
pub struct Tower {
    stage: usize,
    /// 1/w_K.
    denom: u64,
    /// Left endpoint of level i in units of w_K.
    offsets: Vec<u64>,
    /// Inverse of `offsets`: unit index ↦ level.
    level_of_unit: Vec<u32>,
    /// Denominators 1/w_j for j = 0..=K.
    stage_denoms: Vec<u64>,
}

/// Stage-K tower, refusing work beyond `budget` intervals.
pub fn build_tower(spec: &CutSpacerSpec, k: usize, budget: usize) -> Result<Tower, RankOneError> {
    spec.validate()?;
    if k > spec.stages() {
        return Err(RankOneError::InvalidSpec(format!(
            "stage {k} requested but the spec defines {}",
            spec.stages()
        )));
    }
    let heights = spec.heights(k);
    if let Some((stage, &predicted)) = heights.iter().enumerate().find(|(_, &h)| h > budget as u128) {
        return Err(RankOneError::BudgetExceeded { stage, predicted, budget });
    }
    let mut offsets: Vec<u64> = vec![0];
    let mut denom: u64 = 1;
    let mut stage_denoms = vec![1u64];
    for stage in 0..k {
        let r = spec.cuts[stage] as u64;
        let mut next_free = offsets.len() as u64 * r;
        let mut refined = Vec::with_capacity(heights[stage + 1] as usize);
        for (c, &s) in spec.spacers[stage].iter().enumerate() {
            refined.extend(offsets.iter().map(|&o| o * r + c as u64));
            refined.extend(next_free..next_free + s);
            next_free += s;
        }
        offsets = refined;
        denom *= r;
        stage_denoms.push(denom);
    }
    let mut level_of_unit = vec![0u32; offsets.len()];
    for (i, &o) in offsets.iter().enumerate() {
        level_of_unit[o as usize] = i as u32;
    }
    Ok(Tower {
        stage: k,
        denom,
        offsets,
        level_of_unit,
        stage_denoms,
    })
}

fn ratio(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl Tower {
    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn height(&self) -> usize {
        self.offsets.len()
    }

    pub fn base_width(&self) -> BigRational {
        ratio(1, self.denom)
    }

    /// Lebesgue mass of the stacked region, h_K·w_K.
    pub fn total_mass(&self) -> BigRational {
        ratio(self.height() as u64, self.denom)
    }

    /// Level i as the half-open interval [left, right).
    pub fn level(&self, i: usize) -> (BigRational, BigRational) {
        let o = self.offsets[i];
        (ratio(o, self.denom), ratio(o + 1, self.denom))
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    /// Level containing `t`, if `t` lies in the stacked region.
    pub fn level_of(&self, t: &BigRational) -> Option<usize> {
        let scaled = t * BigRational::from_integer(BigInt::from(self.denom));
        let unit = scaled.floor().to_integer().to_usize()?;
        self.level_of_unit.get(unit).map(|&l| l as usize)
    }

    /// T^m t, translating m levels up the column.
    pub fn apply_t(&self, t: &BigRational, m: i64) -> Result<BigRational, RankOneError> {
        let level = self
            .level_of(t)
            .ok_or_else(|| RankOneError::OutsideTower(t.to_string()))?;
        let target = level as i64 + m;
        if target < 0 || target >= self.height() as i64 {
            return Err(RankOneError::EscapesTower {
                level,
                m,
                height: self.height(),
            });
        }
        let shift = BigInt::from(self.offsets[target as usize]) - BigInt::from(self.offsets[level]);
        Ok(t + BigRational::new(shift, BigInt::from(self.denom)))
    }

    /// Number of stage-K units making up the base of stage j ≤ K.
    fn stage_base_units(&self, j: usize) -> u64 {
        self.denom / self.stage_denoms[j]
    }

    /// Centered indicator of the stage-j base [0, w_j), as level values.
    pub fn centered_base_indicator(&self, j: usize) -> Vec<f64> {
        let units = self.stage_base_units(j.min(self.stage));
        let mean = units as f64 / self.height() as f64;
        self.offsets
            .iter()
            .map(|&o| if o < units { 1.0 - mean } else { -mean })
            .collect()
    }

    /// Default test function: centered indicator of the stage-⌈K/2⌉ base.
    pub fn default_function(&self) -> Vec<f64> {
        self.centered_base_indicator(self.stage.div_ceil(2))
    }
}

/// Exact structural check that T is a measure-preserving partial map.
///
/// Levels must tile the stacked region with equal widths, and on each
/// stage-(K−1) level the stage-K map must agree with the stage-(K−1) map.
pub fn check_measure_preserving(spec: &CutSpacerSpec, tower: &Tower, budget: usize) -> Result<(), String> {
    let h = tower.height();
    let mut seen = vec![false; h];
    for &o in &tower.offsets {
        let slot = seen
            .get_mut(o as usize)
            .ok_or_else(|| format!("offset {o} outside the stacked region"))?;
        if *slot {
            return Err(format!("levels overlap at unit {o}"));
        }
        *slot = true;
    }
    let widths: Vec<BigRational> = (0..h)
        .map(|i| {
            let (a, b) = tower.level(i);
            b - a
        })
        .collect();
    if widths.iter().any(|w| *w != tower.base_width()) {
        return Err("level widths differ".into());
    }
    if tower.stage == 0 {
        return Ok(());
    }
    let prev = build_tower(spec, tower.stage - 1, budget).map_err(|e| e.to_string())?;
    let r = spec.cuts[tower.stage - 1] as u64;
    for i in 0..prev.height() - 1 {
        for c in 0..r {
            let lo = tower.level_of_unit[(prev.offsets[i] * r + c) as usize] as usize;
            let hi = tower.level_of_unit[(prev.offsets[i + 1] * r + c) as usize] as usize;
            if hi != lo + 1 {
                return Err(format!("stage map disagrees above level {i}, column {c}"));
            }
        }
    }
    Ok(())
}

/// Correlations c(0..=M) with the fraction of mass dropped at each lag.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    pub values: Vec<f64>,
    /// Mass fraction m/h_K where T^m is undefined at this stage.
    pub truncation: Vec<f64>,
}

impl Correlation {
    /// Profile of the measure with μ̂(n) = c(|n|).
    pub fn to_profile(&self, tail_start: usize) -> FourierProfile {
        let m = self.values.len() as i64 - 1;
        let coeffs = (-m..=m)
            .map(|n| Complex64::new(self.values[n.unsigned_abs() as usize], 0.0))
            .collect();
        FourierProfile::from_coefficients(coeffs, tail_start.min(m.max(1) as usize))
    }

    /// max |c(m)|/c(0) over lo ≤ m ≤ hi.
    pub fn max_ratio(&self, lo: usize, hi: usize) -> f64 {
        let c0 = self.values[0];
        self.values[lo..=hi.min(self.values.len() - 1)]
            .iter()
            .fold(0.0, |acc, v| acc.max(v.abs() / c0))
    }
}

const DIRECT_WORK_LIMIT: usize = 50_000_000;

/// c(m) = (1/h) Σ_{i+m<h} f_i f_{i+m}, with the space normalized to mass 1.
pub fn correlation_sequence(tower: &Tower, f: &[f64], max_lag: usize) -> Result<Correlation, RankOneError> {
    let h = tower.height();
    if f.len() != h {
        return Err(RankOneError::LengthMismatch { got: f.len(), height: h });
    }
    if max_lag > h - 1 {
        return Err(RankOneError::Horizon {
            requested: max_lag,
            max: h - 1,
        });
    }
    let mean = f.iter().sum::<f64>() / h as f64;
    let scale = f.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    if mean.abs() > 1e-9 * scale {
        return Err(RankOneError::NotMeanZero(mean));
    }
    let values = if (max_lag + 1).saturating_mul(h) <= DIRECT_WORK_LIMIT {
        (0..=max_lag)
            .into_par_iter()
            .map(|m| f[..h - m].iter().zip(&f[m..]).map(|(a, b)| a * b).sum::<f64>() / h as f64)
            .collect()
    } else {
        autocorrelation_fft(f, max_lag)
    };
    let truncation = (0..=max_lag).map(|m| m as f64 / h as f64).collect();
    Ok(Correlation { values, truncation })
}

fn autocorrelation_fft(f: &[f64], max_lag: usize) -> Vec<f64> {
    let h = f.len();
    let n = (2 * h).next_power_of_two();
    let mut buf: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    buf.resize(n, Complex64::zero());
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for z in buf.iter_mut() {
        *z = Complex64::new(z.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    (0..=max_lag).map(|m| buf[m].re / (n as f64 * h as f64)).collect()
}

/// gcd-reduced rational from a float numerator in units of `denom`, for sampling.
pub fn point_in_unit(unit: u64, frac_num: u64, frac_den: u64, denom: u64) -> BigRational {
    let num = BigInt::from(unit) * BigInt::from(frac_den) + BigInt::from(frac_num);
    let den = BigInt::from(denom) * BigInt::from(frac_den);
    let g = num.gcd(&den);
    BigRational::new(num / &g, den / g)
}
