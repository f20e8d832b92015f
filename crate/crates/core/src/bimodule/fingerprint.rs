use serde::{Deserialize, Serialize};

use super::BimoduleError;

pub const DEFAULT_N_MAX: usize = 32;
const SUM_TOL: f64 = 1e-12;

/// A positive, strictly decreasing weight sequence summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Weights {
    /// Finitely many weights.
    Explicit { values: Vec<f64> },
    /// α_n = first·ratioⁿ⁻¹ for n ≥ 1.
    Geometric { first: f64, ratio: f64 },
}

impl Weights {
    /// α_n = 2⁻ⁿ.
    pub fn dyadic() -> Weights {
        Weights::Geometric { first: 0.5, ratio: 0.5 }
    }

    /// Geometric weights with ratio r and first term 1 − r.
    pub fn geometric(ratio: f64) -> Weights {
        Weights::Geometric { first: 1.0 - ratio, ratio }
    }

    fn validate(&self) -> Result<(), BimoduleError> {
        let bad = |m: &str| Err(BimoduleError::Weights(m.to_string()));
        match self {
            Weights::Explicit { values } => {
                if values.is_empty() {
                    return bad("no weights");
                }
                if values.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
                    return bad("weights must lie in (0, 1]");
                }
                if values.windows(2).any(|w| w[1] >= w[0]) {
                    return bad("weights must be strictly decreasing");
                }
                let total: f64 = values.iter().sum();
                if (total - 1.0).abs() > SUM_TOL {
                    return Err(BimoduleError::Weights(format!("weights sum to {total}, not 1")));
                }
            }
            Weights::Geometric { first, ratio } => {
                if !(*ratio > 0.0 && *ratio < 1.0) || !(*first > 0.0 && *first <= 1.0) {
                    return bad("geometric weights need 0 < ratio < 1 and 0 < first ≤ 1");
                }
                let total = first / (1.0 - ratio);
                if (total - 1.0).abs() > SUM_TOL {
                    return Err(BimoduleError::Weights(format!("weights sum to {total}, not 1")));
                }
            }
        }
        Ok(())
    }

    /// The first `n` weights (fewer if the sequence is finite).
    pub fn truncate(&self, n: usize) -> Vec<f64> {
        match self {
            Weights::Explicit { values } => values.iter().take(n).copied().collect(),
            Weights::Geometric { first, ratio } => (0..n).map(|k| first * ratio.powi(k as i32)).collect(),
        }
    }
}

/// Measure class of the left–right measure: an absolutely continuous part and
/// singular blocks (αₙ, 2⁻ⁿ) on Eₙ × Eₙ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureClassFingerprint {
    pub ac: f64,
    /// (block mass, weight), sorted by mass descending.
    pub blocks: Vec<(f64, f64)>,
}

pub fn fingerprint(weights: &Weights, n_max: usize) -> Result<MeasureClassFingerprint, BimoduleError> {
    weights.validate()?;
    if n_max == 0 {
        return Err(BimoduleError::Weights("n_max must be positive".into()));
    }
    let mut blocks: Vec<(f64, f64)> = weights
        .truncate(n_max)
        .into_iter()
        .enumerate()
        .map(|(i, a)| (a, 0.5f64.powi(i as i32 + 1)))
        .collect();
    blocks.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    Ok(MeasureClassFingerprint { ac: 1.0, blocks })
}

/// Equality of the sorted block lists, independent of input order.
pub fn compare(a: &MeasureClassFingerprint, b: &MeasureClassFingerprint) -> bool {
    let sorted = |f: &MeasureClassFingerprint| {
        let mut v = f.blocks.clone();
        v.sort_by(|x, y| y.0.total_cmp(&x.0).then(y.1.total_cmp(&x.1)));
        v
    };
    a.ac == b.ac && sorted(a) == sorted(b)
}
