//! Element-count budget shared by tower construction and ball enumeration.

pub const DEFAULT_BUDGET: usize = 1_000_000;
pub const BUDGET_ENV: &str = "SML_BUDGET";

/// Budget from `SML_BUDGET`, falling back to 10⁶ when unset or unparsable.
pub fn from_env() -> usize {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_BUDGET)
}
