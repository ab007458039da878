//! Numerical tolerances, pinned in one place.
//!
//! All values are `f64`; generic code converts with [`crate::Real::cast`].
//! Each constant names the property it guards, and changing one is a contract
//! change for every test that cites it.

/// Gram matrix of stored normals must equal the identity this tightly.
pub const ORTHONORMALITY: f64 = 1e-10;

/// A candidate normal whose residual after orthogonalization is below this
/// fraction of its original norm is declared linearly dependent.
pub const RANK_DEFICIENCY: f64 = 1e-12;

/// Largest tolerated distance between a supplied offset and its projection
/// onto the span of the normals.
pub const OFFSET_RESIDUAL: f64 = 1e-8;

/// Samples from a measure concentrated on a flat must satisfy the linear
/// constraints this tightly (per component).
pub const CONCENTRATION: f64 = 1e-12;

/// Unit-vector norm check for profile directions.
pub const UNIT_NORM: f64 = 1e-12;

/// Agreement between two exact code paths (closed forms, relabelings).
pub const EXACT_MATCH: f64 = 1e-10;

/// Agreement between exact and deterministic-quadrature engines.
pub const ENGINE_AGREEMENT: f64 = 1e-8;

/// Above this imaginary magnitude a holomorphic series refuses to be read as
/// a real function.
pub const SB_IMAG_ERROR: f64 = 1e-6;

/// Relative singular-value cutoff for least-squares solves.
pub const SVD_CUTOFF: f64 = 1e-10;

/// Largest acceptable design-matrix condition number.
pub const DESIGN_CONDITION_MAX: f64 = 1e6;

/// A profile offset grid is recognized as a Gauss-Hermite node grid when each
/// offset matches the node within this (absolute, nodes are O(1..10)).
pub const NODE_GRID_MATCH: f64 = 1e-9;

/// Degree cap for monomial expansion of Hermite series (factorial growth).
pub const MAX_DEGREE: usize = 30;

/// Tensor-quadrature engines refuse more integration axes than this.
pub const MAX_TENSOR_DIM: usize = 6;
