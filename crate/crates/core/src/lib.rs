//! Numerical energy densities of Borel measures and Brody curves.
//!
//! The crate computes translation-invariant density functionals of
//! measures with bounded density on `R^D` (`D = 1, 2, 3`) and of
//! meromorphic curves `C -> CP^1`:
//!
//! * `rho`: limiting worst-case (sup over translates) ball average,
//! * `rho_tilde`: the iterated sup-inf ball average,
//! * `T(r, f)`: the Nevanlinna-Shimizu-Ahlfors characteristic,
//! * `rho_nsa` / `rho_nsa_lower`: limsup/liminf of `2 T(r,f) / (pi r^2)`,
//!
//! together with the finite Vitali covering selection, Folner-sequence
//! diagnostics, Ornstein-Weiss averaging and a verification harness that
//! checks the density-equality identities at finite schedules.

pub mod cli;
pub mod covering;
pub mod curves;
pub mod estimators;
pub mod field;
pub mod geometry;
pub mod report;
pub mod verify;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension {0} is not supported (expected 1, 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(
        "quadrature did not converge: estimate {estimate}, last refinement changed by {change} (tolerance {tolerance})"
    )]
    QuadratureNonConvergence {
        estimate: f64,
        change: f64,
        tolerance: f64,
    },
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
