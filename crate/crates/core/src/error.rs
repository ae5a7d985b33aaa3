//! Error types shared across the crate.

use thiserror::Error;

/// Evaluation-time failures: bad states, singular configurations, domain
/// violations of a coordinate map or potential.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("state has {positions} positions but {momenta} momenta")]
    MismatchedState { positions: usize, momenta: usize },

    #[error("phase state must have at least one site")]
    EmptyState,

    #[error("non-finite entry in phase state or parameters")]
    NonFinite,

    #[error("dimension mismatch: state has N={state}, expected N={expected}")]
    DimensionMismatch { state: usize, expected: usize },

    #[error(
        "singular configuration: q[{index}] = 0 while centrifugal coefficient b[{index}] = {b}"
    )]
    SingularConfiguration { index: usize, b: f64 },

    #[error("site index out of range: i={i}, h={h} with N={n}")]
    IndexOutOfRange { i: usize, h: usize, n: usize },

    #[error("domain error: {0}")]
    Domain(String),
}

/// Construction-time failures for Hamiltonian families, metrics and
/// coordinate systems.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum BuildError {
    #[error("centrifugal coefficient list has length {got}, expected {expected}")]
    BadCoefficientCount { expected: usize, got: usize },

    #[error("signature parameter kappa2 must be nonzero")]
    ZeroSignature,

    #[error("kinetic factor must satisfy f(0) = 1, got f(0) = {got}")]
    KineticFactorNotNormalized { got: f64 },

    #[error("{0} is undefined at z = 0; choose a nonzero deformation")]
    UndefinedAtZeroDeformation(&'static str),

    #[error("metric extraction needs a purely kinetic Hamiltonian: {0}")]
    NotKinetic(&'static str),

    #[error(
        "Kepler extra integrals require at least one vanishing centrifugal coefficient b_i = 0"
    )]
    KeplerNeedsFreeAxis,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl From<BuildError> for EvalError {
    fn from(e: BuildError) -> Self {
        EvalError::Domain(e.to_string())
    }
}
