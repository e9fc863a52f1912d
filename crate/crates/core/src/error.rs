//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Site count exceeds the exact-enumeration cap.
    #[error("{n_sites} sites exceeds the enumeration cap of {cap}")]
    SizeExceeded { n_sites: usize, cap: usize },

    /// Malformed bath specification or weight data; the message names the
    /// violated invariant.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// Topology shortcut not recognized or not applicable.
    #[error("unsupported topology: {0}")]
    TopologyUnsupported(String),

    /// Input carries nothing to work with (all-zero weights, too few samples).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A fugacity zero sits at z = 1 within the angle floor, so the
    /// product-form denominator vanishes.
    #[error("zero angle {0:.3e} lies within the angle floor of z = 1")]
    ZeroAtUnity(f64),

    /// Operation invoked for a coupling mode it does not support.
    #[error("mode mismatch: {0}")]
    ModeMismatch(String),

    /// State support leaks outside the requested two-level subspace.
    #[error("subspace violation: population {0:.3e} outside the subspace")]
    SubspaceViolation(f64),

    /// Density matrix or state fails a physicality check.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// Scalar argument outside the mathematical domain.
    #[error("domain error: {0}")]
    DomainError(String),

    /// Backend eigensolver failure.
    #[error("linear algebra backend: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),

    /// Malformed JSON input.
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
