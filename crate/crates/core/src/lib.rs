//! Consistent-histories engine for finite-dimensional Hilbert spaces.
//!
//! Layers, bottom up:
//!
//! - [`linalg`]: dense complex operators and state vectors.
//! - [`projectors`]: projectors, decompositions of the identity, spin-half
//!   constructors.
//! - [`histories`]: multi-time frameworks, chain operators, the decoherence
//!   functional and Born-rule probability tables.
//! - [`causality`]: independence, correlation, ideal and common causes over
//!   those tables, guarded by the single framework rule.
//! - [`eprb`]: spin measurement frameworks and the two-particle singlet
//!   scenario (joint distributions, correlators, CHSH).
//! - [`classical_hv`]: local hidden-variable models and the classical CHSH
//!   bound.
//! - [`cli`]: scenario configuration, dispatch and report rendering.

pub mod causality;
pub mod classical_hv;
pub mod cli;
pub mod eprb;
pub mod error;
pub mod histories;
pub mod linalg;
pub mod projectors;
pub mod tolerance;

pub use error::{Error, Result};
