//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by the plate solver pipeline.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// Evaluation point outside the parametric or physical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid knot vector or spline space construction.
    #[error("spline error: {0}")]
    Spline(String),

    /// Inadmissible material data (non-SPD compliance, bad moduli).
    #[error("material error: {0}")]
    Material(String),

    /// Homogenization failed (non-symmetric layup, non-SPD result).
    #[error("homogenization error: {0}")]
    Homogenization(String),

    /// Inconsistent boundary data while building collocation rows.
    #[error("assembly error: {0}")]
    Assembly(String),

    /// Singular or unacceptably ill-conditioned linear system.
    #[error("solver error: {0}")]
    Solver(String),

    /// Stress recovery preconditions violated (insufficient regularity).
    #[error("recovery error: {0}")]
    Recovery(String),

    /// Invalid benchmark case configuration.
    #[error("config error: {0}")]
    Config(String),

    /// I/O failure while writing result files.
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
