//! Gaussian Radon transform on finite-dimensional Gaussian models.
//!
//! The ambient space is R^d with the standard Gaussian measure. The crate
//! provides:
//!
//! - [`gauss`]: affine subspaces (flats) and the degenerate Gaussian
//!   measures concentrated on them, with exact sampling and characteristic
//!   functionals;
//! - [`hermite`]: the Hermite-series function model, black-box point
//!   functions, and the Gaussian moment oracle behind every closed form;
//! - [`radon`]: the Gaussian Radon transform (expectation of a function
//!   under the measure on a flat) with exact, tensor-quadrature, and Monte
//!   Carlo engines, and profiles along hyperplane families;
//! - [`disintegration`]: the factorization of the ambient Gaussian through
//!   the measures on parallel flats, and the conditional-expectation
//!   identity it encodes, as computable residual checks;
//! - [`bargmann`]: the Segal-Bargmann transform on the polynomial sector,
//!   its inverse, quadrature evaluation, and the weighted coefficient norm;
//! - [`inversion`]: tomographic recovery of a Hermite series from Radon
//!   profiles over finitely many directions, degree by degree, with full
//!   conditioning diagnostics;
//! - [`wiener`]: a truncated Karhunen-Loeve model of Brownian motion that
//!   instantiates the same machinery on path functionals.
//!
//! Everything is generic over the scalar type through [`Real`] (`f32` or
//! `f64`); the `*64`/`*32` aliases below pick concrete instantiations.
//! Randomized routines take explicit seeds and obey the substream contract
//! in [`real`]: results are bit-identical regardless of thread count.

pub mod bargmann;
pub mod disintegration;
pub mod error;
pub mod gauss;
pub mod hermite;
pub mod inversion;
pub mod linalg;
pub mod multi_index;
pub mod quadrature;
pub mod radon;
pub mod real;
pub mod tol;
pub mod wiener;

pub use disintegration::OuterEngine;
pub use error::{Error, Result};
pub use inversion::{DesignStrategy, ProfileSource};
pub use radon::Engine;
pub use real::{mix_seed, substream_rng, Real};

/// `f64` instantiations of the main types.
pub type Flat64 = gauss::Flat<f64>;
pub type SubspaceGaussian64 = gauss::SubspaceGaussian<f64>;
pub type HermiteSeries64 = hermite::HermiteSeries<f64>;
pub type PointFunction64 = hermite::PointFunction<f64>;
pub type Integrand64 = hermite::Integrand<f64>;
pub type RadonProfile64 = radon::RadonProfile<f64>;
pub type HolomorphicSeries64 = bargmann::HolomorphicSeries<f64>;
pub type DirectionDesign64 = inversion::DirectionDesign<f64>;
pub type ReconstructionReport64 = inversion::ReconstructionReport<f64>;
pub type KLModel64 = wiener::KLModel<f64>;

/// `f32` instantiations of the main types.
pub type Flat32 = gauss::Flat<f32>;
pub type SubspaceGaussian32 = gauss::SubspaceGaussian<f32>;
pub type HermiteSeries32 = hermite::HermiteSeries<f32>;
pub type PointFunction32 = hermite::PointFunction<f32>;
pub type Integrand32 = hermite::Integrand<f32>;
pub type RadonProfile32 = radon::RadonProfile<f32>;
pub type HolomorphicSeries32 = bargmann::HolomorphicSeries<f32>;
pub type KLModel32 = wiener::KLModel<f32>;
