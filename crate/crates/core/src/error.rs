//! Error taxonomy shared by every module.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong, with enough payload to diagnose it.
///
/// Diagnostic magnitudes are carried as `f64` regardless of the scalar type
/// the computation ran at.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Vector or matrix dimensions do not agree.
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    /// Supplied normal directions are rank deficient (or a vector is zero).
    #[error("degenerate normal basis: {detail}")]
    DegenerateBasis { detail: String },

    /// Offset does not lie in the span of the normals.
    #[error("offset is not in the span of the normals (projection residual {residual:.3e})")]
    InconsistentOffset { residual: f64 },

    /// Requested engine cannot handle this problem size.
    #[error("engine unavailable: {detail}")]
    EngineUnavailable { detail: String },

    /// Operation needs a Hermite series but was given a black-box function.
    #[error("{op} requires a Hermite-series integrand, not a black-box function")]
    SeriesRequired { op: &'static str },

    /// Series degree exceeds the monomial-expansion guard.
    #[error("series degree {degree} exceeds the supported maximum {max}")]
    DegreeOverflow { degree: usize, max: usize },

    /// Profile grid too small for the requested coefficient extraction.
    #[error("offset grid has {found} points but {needed} are required")]
    InsufficientGrid { needed: usize, found: usize },

    /// No acceptably conditioned direction design found.
    #[error(
        "direction design is too ill-conditioned (best condition number {best_condition:.3e})"
    )]
    DesignFailure { best_condition: f64 },

    /// Holomorphic coefficients carry too much imaginary part to be a real
    /// function.
    #[error("coefficients are not real (max imaginary magnitude {max_imag:.3e})")]
    NonRealFunction { max_imag: f64 },

    /// Registry lookup failed.
    #[error("unknown function {name:?}")]
    UnknownFunction { name: String },

    /// Parameter outside its documented domain.
    #[error("invalid parameter: {detail}")]
    InvalidParameter { detail: String },

    /// Malformed serialized input (CSV or JSON).
    #[error("format error: {detail}")]
    Format { detail: String },
}
