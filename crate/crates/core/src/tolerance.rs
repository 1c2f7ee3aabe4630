//! Numerical thresholds shared by every check in the crate.
//!
//! Scenario matrices are built from ±1, ±1/2 and 1/√2, so anything larger
//! than these thresholds points at a construction bug rather than round-off.

use serde::{Deserialize, Serialize};

/// Normalization threshold for state vectors.
pub const NORM: f64 = 1e-10;
/// Idempotence, hermiticity, orthogonality and commutation threshold.
pub const PROJ: f64 = 1e-10;
/// Bound on off-diagonal decoherence functional magnitudes.
pub const CONS: f64 = 1e-10;
/// Probability comparisons.
pub const PROB: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub norm: f64,
    pub proj: f64,
    pub cons: f64,
    pub prob: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            norm: NORM,
            proj: PROJ,
            cons: CONS,
            prob: PROB,
        }
    }
}

impl Tolerances {
    /// Overrides the projector, consistency and probability thresholds
    /// jointly. Normalization keeps its default.
    pub fn uniform(tol: f64) -> Self {
        Self {
            norm: NORM,
            proj: tol,
            cons: tol,
            prob: tol,
        }
    }
}
