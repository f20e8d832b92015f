//! Finite-model laboratory for mixing and weakly mixing masas.
//!
//! The crate is organised by the objects it computes with:
//!
//! - [`circle_measures`]: measures on the circle, Fourier coefficients, Wiener
//!   atom recovery and Cesàro decay profiles (including Riesz products).
//! - [`rank_one`]: cutting-and-stacking towers, orbit evaluation and
//!   correlation sequences.
//! - [`groups`]: exact arithmetic in decidable group models with a marked
//!   abelian subgroup.
//! - [`group_masa`]: group-algebra computations over those models: conditional
//!   expectation, the (ST) condition, stabilizers, Cesàro diagnostics.
//! - [`bimodule`]: bivariate measures on finite models, disintegration,
//!   finite Koopman models and measure-class fingerprints.
//!
//! Every asymptotic statement is reported as a finite-horizon certificate;
//! nothing here claims a limit.

pub mod bimodule;
pub mod budget;
pub mod circle_measures;
pub mod cli;
pub mod format;
pub mod group_masa;
pub mod groups;
pub mod rank_one;
pub mod scalar;

pub use scalar::Scalar;
