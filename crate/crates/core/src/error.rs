//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter violated its domain invariant.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Adaptive quadrature exhausted its subdivision budget.
    #[error("quadrature did not converge: achieved error estimate {achieved:e} (target {target:e})")]
    Quadrature { achieved: f64, target: f64 },

    /// A Fock-space truncation left more probability outside the cutoff than allowed.
    #[error("Fock truncation at n_max = {n_max} leaves trace deficit {deficit:e} (target {target:e})")]
    Truncation { n_max: usize, deficit: f64, target: f64 },

    /// Occupation index outside the precomputed factorial table.
    #[error("occupation index {index} exceeds factorial table size {limit}")]
    IndexOutOfRange { index: usize, limit: usize },

    /// The two polarization pairs do not describe the symmetric, opposite-sign link state.
    #[error("inconsistent pair states: {0}")]
    InconsistentPairs(String),

    /// Run-configuration text that names an unknown key or an invalid value.
    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    /// Probabilities that do not form a valid outcome distribution.
    #[error("inconsistent probabilities: {0}")]
    InconsistentProbabilities(String),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
