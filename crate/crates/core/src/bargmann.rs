//! The Segal-Bargmann transform on the Hermite model: `Sf` at a complex
//! point is `exp(-z.z/2)` times the Gaussian integral of `exp(z.x) f(x)`,
//! and on Hermite coefficients it acts as the relabeling `He_m -> z^m`.
//!
//! The transform is exact on series (a coefficient-preserving map into
//! holomorphic monomial series), and a tensor Gauss-Hermite route evaluates
//! it directly from the defining integral for cross-checks; the direct
//! route reports a two-level disagreement estimate because its accuracy
//! degrades sharply once `|z|^2` outgrows the quadrature level.

use std::collections::BTreeMap;

pub use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{HermiteSeries, Integrand};
use crate::multi_index::MultiIndex;
use crate::quadrature::for_each_tensor_node;
use crate::real::Real;
use crate::tol;

/// Entire function given by a finite monomial series `sum c_m z^m`,
/// the image of a Hermite series under the transform.
#[derive(Debug, Clone, PartialEq)]
pub struct HolomorphicSeries<T: Real> {
    dim: usize,
    coeffs: BTreeMap<MultiIndex, Complex<T>>,
}

#[derive(Serialize, Deserialize)]
struct TermRecord {
    exponents: Vec<u32>,
    re: f64,
    im: f64,
}

impl<T: Real> HolomorphicSeries<T> {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn from_terms(
        dim: usize,
        terms: impl IntoIterator<Item = (MultiIndex, Complex<T>)>,
    ) -> Result<Self> {
        let mut out = Self::zero(dim);
        for (m, c) in terms {
            if m.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "holomorphic series term",
                    expected: dim,
                    found: m.len(),
                });
            }
            if m.degree() as usize > tol::MAX_DEGREE {
                return Err(Error::DegreeOverflow {
                    degree: m.degree() as usize,
                    max: tol::MAX_DEGREE,
                });
            }
            *out.coeffs.entry(m).or_insert_with(Complex::zero) += c;
        }
        out.coeffs.retain(|_, c| !c.is_zero());
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> u32 {
        self.coeffs
            .keys()
            .map(MultiIndex::degree)
            .max()
            .unwrap_or(0)
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeff(&self, m: &MultiIndex) -> Complex<T> {
        self.coeffs.get(m).copied().unwrap_or_else(Complex::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, Complex<T>)> {
        self.coeffs.iter().map(|(m, &c)| (m, c))
    }

    /// Evaluates the monomial series at a complex point.
    pub fn eval(&self, z: &[Complex<T>]) -> Result<Complex<T>> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "holomorphic series argument",
                expected: self.dim,
                found: z.len(),
            });
        }
        let mut acc = Complex::zero();
        for (m, c) in &self.coeffs {
            let mut term = *c;
            for (axis, &e) in m.exponents().iter().enumerate() {
                if e > 0 {
                    term *= z[axis].powu(e);
                }
            }
            acc += term;
        }
        Ok(acc)
    }

    /// Norm under the holomorphic inner product with weights `m!`, the one
    /// that makes the transform an isometry from the Gaussian L2 space:
    /// `sqrt(sum |c_m|^2 m!)`.
    pub fn norm(&self) -> T {
        self.coeffs
            .iter()
            .map(|(m, c)| c.norm_sqr() * T::cast(m.factorial()))
            .sum::<T>()
            .sqrt()
    }

    /// Largest coefficient imaginary part in magnitude; zero for images of
    /// real functions.
    pub fn max_imag(&self) -> T {
        self.coeffs
            .values()
            .map(|c| c.im.abs())
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    pub fn to_json_string(&self) -> String {
        let records: Vec<TermRecord> = self
            .coeffs
            .iter()
            .map(|(m, c)| TermRecord {
                exponents: m.exponents().to_vec(),
                re: c.re.to_f64().unwrap(),
                im: c.im.to_f64().unwrap(),
            })
            .collect();
        serde_json::to_string_pretty(&records).expect("plain records serialize")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let records: Vec<TermRecord> = serde_json::from_str(text).map_err(|e| Error::Format {
            detail: format!("holomorphic series json: {e}"),
        })?;
        if records.is_empty() {
            return Err(Error::Format {
                detail: "holomorphic series json holds no terms".into(),
            });
        }
        let dim = records[0].exponents.len();
        Self::from_terms(
            dim,
            records.into_iter().map(|r| {
                (
                    MultiIndex::new(r.exponents),
                    Complex::new(T::cast(r.re), T::cast(r.im)),
                )
            }),
        )
    }
}

/// The transform of a Hermite series: the relabeling `He_m -> z^m`, exact
/// on coefficients.
pub fn sb_forward<T: Real>(f: &HermiteSeries<T>) -> HolomorphicSeries<T> {
    HolomorphicSeries {
        dim: f.dim(),
        coeffs: f
            .terms()
            .map(|(m, c)| (m.clone(), Complex::new(c, T::zero())))
            .collect(),
    }
}

/// Inverts the relabeling. Fails if any coefficient carries an imaginary
/// part beyond rounding, since those series are not transforms of real
/// functions.
pub fn sb_inverse<T: Real>(g: &HolomorphicSeries<T>) -> Result<HermiteSeries<T>> {
    let max_imag = g.max_imag().to_f64().unwrap();
    if max_imag > tol::SB_IMAG_ERROR {
        return Err(Error::NonRealFunction { max_imag });
    }
    HermiteSeries::from_terms(g.dim(), g.terms().map(|(m, c)| (m.clone(), c.re)))
}

/// Whether the direct quadrature at this level is trustworthy at `z`:
/// the integrand `exp(z.x)` concentrates mass outside the node range once
/// `|z|^2` passes about half the level.
pub fn sb_quadrature_reliable<T: Real>(z: &[Complex<T>], level: usize) -> bool {
    let norm_sq: f64 = z.iter().map(|c| c.norm_sqr().to_f64().unwrap()).sum();
    norm_sq <= level as f64 / 2.0
}

fn sb_quadrature_once<T: Real>(
    f: &Integrand<T>,
    z: &[Complex<T>],
    level: usize,
) -> Result<Complex<T>> {
    let dim = f.dim();
    let mut acc = Complex::<T>::zero();
    let mut failure: Option<Error> = None;
    for_each_tensor_node(level, dim, |w: T, x: &[T]| {
        if failure.is_some() {
            return;
        }
        let v = match f.evaluate(x) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        let mut dot = Complex::<T>::zero();
        for (&zk, &xk) in z.iter().zip(x) {
            dot += zk * xk;
        }
        acc += dot.exp() * (w * v);
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    // bilinear square z.z, not the hermitian norm
    let zz = z.iter().map(|&c| c * c).sum::<Complex<T>>();
    Ok((-zz * T::cast(0.5)).exp() * acc)
}

/// The transform straight from its defining integral by tensor
/// Gauss-Hermite, for cross-checking the series route on arbitrary
/// integrands. Runs the rule at `level` and `level + 4` and returns the
/// refined value with the two-level disagreement as an error estimate;
/// when `z` is outside the reliable region for `level`
/// ([`sb_quadrature_reliable`]), that estimate is the only warning.
///
/// Requires `level >= 8` and at most [`tol::MAX_TENSOR_DIM`] dimensions.
pub fn sb_quadrature<T: Real>(
    f: &Integrand<T>,
    z: &[Complex<T>],
    level: usize,
) -> Result<(Complex<T>, T)> {
    if level < 8 {
        return Err(Error::InvalidParameter {
            detail: format!("direct transform needs level >= 8, got {level}"),
        });
    }
    if z.len() != f.dim() {
        return Err(Error::DimensionMismatch {
            context: "transform point",
            expected: f.dim(),
            found: z.len(),
        });
    }
    if f.dim() > tol::MAX_TENSOR_DIM {
        return Err(Error::EngineUnavailable {
            detail: format!(
                "direct transform integrates over {} dimensions; the limit is {}",
                f.dim(),
                tol::MAX_TENSOR_DIM
            ),
        });
    }
    let coarse = sb_quadrature_once(f, z, level)?;
    let fine = sb_quadrature_once(f, z, level + 4)?;
    let estimate = (fine - coarse).norm();
    Ok((fine, estimate))
}
