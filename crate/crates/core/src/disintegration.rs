//! Disintegration of the standard Gaussian over a family of parallel flats,
//! and the identification of the flat-wise transform with a conditional
//! expectation.
//!
//! Fixing orthonormal normal directions `U = {u_1, ..., u_n}`, the standard
//! Gaussian splits as an outer Gaussian over the normal coordinates and the
//! flat-concentrated measures indexed by them: integrating the flat-wise
//! transform `s -> Gf(flat through sum s_k u_k)` against the outer Gaussian
//! recovers the full-space expectation. The same curve, composed with the
//! projection onto `span U`, is the conditional expectation of `f` given
//! that projection; this module checks both statements, the first by
//! engine-vs-engine comparison and the second by binned sample means and by
//! the orthogonality property that defines conditional expectation.

use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::gauss::Flat;
use crate::hermite::{expect_under, he_value, HermiteSeries, Integrand};
use crate::linalg;
use crate::multi_index::monomials_up_to;
use crate::quadrature::for_each_tensor_node;
use crate::radon::{gauss_radon, Engine};
use crate::real::{mix_seed, substream_rng, Real};
use crate::tol;

/// Distinguished substream index for the full-space side of a
/// disintegration check, so it never shares a stream with an outer node.
const LHS_STREAM: u64 = u64::MAX;

/// Engine for the outer integral over the normal coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OuterEngine {
    /// Tensor Gauss-Hermite over the `n` normal coordinates.
    Quadrature { level: usize },
    /// Monte Carlo over the outer Gaussian, one substream per draw.
    MonteCarlo { samples: usize, seed: u64 },
}

impl OuterEngine {
    pub fn label(&self) -> String {
        match self {
            OuterEngine::Quadrature { level } => format!("quadrature level={level}"),
            OuterEngine::MonteCarlo { samples, seed } => {
                format!("mc samples={samples} seed={seed}")
            }
        }
    }
}

/// Both sides of the disintegration identity, with standard errors where an
/// engine is stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct DisintegrationReport<T: Real> {
    pub dim: usize,
    pub codim: usize,
    pub lhs: T,
    pub lhs_stderr: Option<T>,
    pub rhs: T,
    pub rhs_stderr: Option<T>,
    pub inner: String,
    pub outer: String,
}

impl<T: Real> DisintegrationReport<T> {
    pub fn residual(&self) -> T {
        (self.lhs - self.rhs).abs()
    }

    /// Root-sum-square of the stderrs present on either side.
    pub fn combined_stderr(&self) -> T {
        let mut acc = T::zero();
        for s in [self.lhs_stderr, self.rhs_stderr].into_iter().flatten() {
            acc += s * s;
        }
        acc.sqrt()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("dim = {}\n", self.dim));
        out.push_str(&format!("codim = {}\n", self.codim));
        out.push_str(&format!("lhs = {}\n", self.lhs));
        if let Some(s) = self.lhs_stderr {
            out.push_str(&format!("lhs_stderr = {s}\n"));
        }
        out.push_str(&format!("rhs = {}\n", self.rhs));
        if let Some(s) = self.rhs_stderr {
            out.push_str(&format!("rhs_stderr = {s}\n"));
        }
        out.push_str(&format!("residual = {}\n", self.residual()));
        out.push_str(&format!("inner = {}\n", self.inner));
        out.push_str(&format!("outer = {}\n", self.outer));
        out
    }
}

/// Orthonormalizes `normals` and returns them with the ambient dimension.
fn normal_frame<T: Real>(normals: &[Vec<T>]) -> Result<(Vec<Vec<T>>, usize)> {
    if normals.is_empty() {
        return Err(Error::InvalidParameter {
            detail: "disintegration needs at least one normal direction".into(),
        });
    }
    let dim = normals[0].len();
    let frame = linalg::orthonormalize(normals)?;
    Ok((frame, dim))
}

/// Orthogonal projection onto the span of `normals`: `N N^T x`.
pub fn projection_map<T: Real>(normals: &[Vec<T>], x: &[T]) -> Result<Vec<T>> {
    let (frame, dim) = normal_frame(normals)?;
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            context: "projection argument",
            expected: dim,
            found: x.len(),
        });
    }
    Ok(linalg::project_onto_span(&frame, x))
}

/// Checks `integral of f over the whole space = outer integral of the
/// flat-wise transform`, evaluating the left side with an engine of the
/// same kind as `inner` so both sides share their error model.
///
/// When `inner` is the quadrature engine but the ambient dimension exceeds
/// its tensor limit, the left side falls back to the exact engine (the
/// right side is where the inner quadrature does its work).
pub fn disintegration_check<T: Real>(
    f: &Integrand<T>,
    normals: &[Vec<T>],
    inner: Engine,
    outer: OuterEngine,
) -> Result<DisintegrationReport<T>> {
    let (frame, dim) = normal_frame(normals)?;
    if f.dim() != dim {
        return Err(Error::DimensionMismatch {
            context: "disintegration integrand",
            expected: dim,
            found: f.dim(),
        });
    }
    let n = frame.len();

    let lhs_engine = match inner {
        Engine::Exact => Engine::Exact,
        Engine::Quadrature { level } => {
            if dim <= tol::MAX_TENSOR_DIM {
                Engine::Quadrature { level }
            } else if f.as_series().is_some() {
                Engine::Exact
            } else {
                return Err(Error::EngineUnavailable {
                    detail: format!(
                        "full-space side needs {dim}-dimensional quadrature (limit {}) \
                         and the integrand has no series form",
                        tol::MAX_TENSOR_DIM
                    ),
                });
            }
        }
        Engine::MonteCarlo { samples, seed } => Engine::MonteCarlo {
            samples,
            seed: mix_seed(seed, LHS_STREAM),
        },
    };
    let (lhs, lhs_stderr) = gauss_radon(f, &Flat::full_space(dim), lhs_engine)?;

    // inner transform at the flat with normal offset sum_k s_k u_k
    let inner_at = |s: &[T], stream: u64| -> Result<(T, Option<T>)> {
        let mut p = vec![T::zero(); dim];
        for (k, &sk) in s.iter().enumerate() {
            for (pj, &uj) in p.iter_mut().zip(&frame[k]) {
                *pj += sk * uj;
            }
        }
        let engine = match inner {
            Engine::MonteCarlo { samples, seed } => Engine::MonteCarlo {
                samples,
                seed: mix_seed(seed, stream),
            },
            e => e,
        };
        gauss_radon(f, &Flat::new(&frame, &p)?, engine)
    };

    let (rhs, rhs_stderr) = match outer {
        OuterEngine::Quadrature { level } => {
            let mut acc = T::zero();
            let mut var = T::zero();
            let mut failure: Option<Error> = None;
            let mut index: u64 = 0;
            for_each_tensor_node(level, n, |w: T, s: &[T]| {
                if failure.is_some() {
                    return;
                }
                match inner_at(s, index) {
                    Ok((v, se)) => {
                        acc += w * v;
                        if let Some(se) = se {
                            var += (w * se) * (w * se);
                        }
                    }
                    Err(e) => failure = Some(e),
                }
                index += 1;
            })?;
            if let Some(e) = failure {
                return Err(e);
            }
            let stderr = if inner.is_stochastic() {
                Some(var.sqrt())
            } else {
                None
            };
            (acc, stderr)
        }
        OuterEngine::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidParameter {
                    detail: "outer mc needs at least one sample".into(),
                });
            }
            let values: Vec<T> = (0..samples)
                .into_par_iter()
                .map(|i| {
                    let mut rng = substream_rng(seed, i as u64);
                    let s: Vec<T> = (0..n).map(|_| T::standard_normal(&mut rng)).collect();
                    inner_at(&s, i as u64).map(|(v, _)| v)
                })
                .collect::<Result<_>>()?;
            let count = T::cast(samples as f64);
            let mean = values.iter().copied().sum::<T>() / count;
            let stderr = if samples == 1 {
                T::zero()
            } else {
                let ss: T = values.iter().map(|&v| (v - mean) * (v - mean)).sum();
                (ss / (count - T::one()) / count).sqrt()
            };
            (mean, Some(stderr))
        }
    };

    Ok(DisintegrationReport {
        dim,
        codim: n,
        lhs,
        lhs_stderr,
        rhs,
        rhs_stderr,
        inner: match inner {
            Engine::Exact => "exact".into(),
            Engine::Quadrature { level } => format!("quadrature level={level}"),
            Engine::MonteCarlo { samples, seed } => format!("mc samples={samples} seed={seed}"),
        },
        outer: outer.label(),
    })
}

/// The flat-wise transform as a series in the normal coordinates: the
/// `n`-dimensional Hermite series `g` with `g(s) = Gf(flat through
/// sum s_k u_k)`, which composed with the projection coordinates is the
/// conditional expectation of `f` given them.
///
/// Coefficients are projections `E[g(S) He_m(S)] / m!` computed by tensor
/// Gauss-Hermite at a level exact for polynomials of `g`'s degree, so the
/// result is exact up to rounding; coefficients below `1e-14` in magnitude
/// are dropped as projection rounding.
pub fn conditional_series<T: Real>(
    f: &HermiteSeries<T>,
    normals: &[Vec<T>],
) -> Result<HermiteSeries<T>> {
    let (frame, dim) = normal_frame(normals)?;
    if f.dim() != dim {
        return Err(Error::DimensionMismatch {
            context: "conditional series integrand",
            expected: dim,
            found: f.dim(),
        });
    }
    let n = frame.len();
    if n > tol::MAX_TENSOR_DIM {
        return Err(Error::EngineUnavailable {
            detail: format!(
                "conditional series projects over {n} normal coordinates; the limit is {}",
                tol::MAX_TENSOR_DIM
            ),
        });
    }
    let degree = f.degree() as usize;
    let level = degree + 1;
    let indices = monomials_up_to(n, degree as u32);
    let mut sums = vec![T::zero(); indices.len()];
    let mut failure: Option<Error> = None;
    for_each_tensor_node(level, n, |w: T, s: &[T]| {
        if failure.is_some() {
            return;
        }
        let mut p = vec![T::zero(); dim];
        for (k, &sk) in s.iter().enumerate() {
            for (pj, &uj) in p.iter_mut().zip(&frame[k]) {
                *pj += sk * uj;
            }
        }
        let value = Flat::new(&frame, &p)
            .map(crate::gauss::SubspaceGaussian::new)
            .and_then(|g| expect_under(f, &g));
        let v = match value {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        for (sum, m) in sums.iter_mut().zip(&indices) {
            let mut he = T::one();
            for (axis, &sk) in s.iter().enumerate() {
                he *= he_value(m.exponents()[axis], sk);
            }
            *sum += w * v * he;
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let terms = indices
        .into_iter()
        .zip(sums)
        .map(|(m, sum)| {
            let c = sum / T::cast(m.factorial());
            (m, c)
        })
        .filter(|(_, c)| c.to_f64().unwrap().abs() > 1e-14);
    HermiteSeries::from_terms(n, terms)
}

/// Gap `E|f|^r - E|E[f | projection]|^r` of the conditional-expectation
/// contraction, with a standard error when the gap is estimated by paired
/// sampling. `r = 2` is exact through series norms (stderr absent); `r = 1`
/// pairs `|f(x)|` with `|g(projection coords of x)|` over shared draws.
pub fn lr_contraction_gap<T: Real>(
    f: &HermiteSeries<T>,
    normals: &[Vec<T>],
    r: u32,
    samples: usize,
    seed: u64,
) -> Result<(T, Option<T>)> {
    let g = conditional_series(f, normals)?;
    match r {
        2 => Ok((f.l2_norm_sq() - g.l2_norm_sq(), None)),
        1 => {
            if samples == 0 {
                return Err(Error::InvalidParameter {
                    detail: "paired estimate needs at least one sample".into(),
                });
            }
            let (frame, dim) = normal_frame(normals)?;
            let diffs: Vec<T> = (0..samples)
                .into_par_iter()
                .map(|i| {
                    let mut rng = substream_rng(seed, i as u64);
                    let x: Vec<T> = (0..dim).map(|_| T::standard_normal(&mut rng)).collect();
                    let s: Vec<T> = frame.iter().map(|u| linalg::dot(u, &x)).collect();
                    Ok(f.evaluate(&x)?.abs() - g.evaluate(&s)?.abs())
                })
                .collect::<Result<_>>()?;
            let count = T::cast(samples as f64);
            let mean = diffs.iter().copied().sum::<T>() / count;
            let stderr = if samples == 1 {
                T::zero()
            } else {
                let ss: T = diffs.iter().map(|&v| (v - mean) * (v - mean)).sum();
                (ss / (count - T::one()) / count).sqrt()
            };
            Ok((mean, Some(stderr)))
        }
        other => Err(Error::InvalidParameter {
            detail: format!("contraction exponent must be 1 or 2, got {other}"),
        }),
    }
}

/// One cell of the binned conditional-expectation comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct BinStat<T: Real> {
    /// Gaussian-conditional mean of each projection coordinate over the cell.
    pub center: Vec<T>,
    pub count: usize,
    /// Sample mean of `f` over draws landing in the cell.
    pub empirical: T,
    pub stderr: T,
    /// Exact conditional mean of the curve over the cell.
    pub predicted: T,
    /// Set when the cell holds too few draws for its mean to be meaningful.
    pub low_count: bool,
}

/// One orthogonality residual `mean((f - g(projection)) * h(projection))`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoStat<T: Real> {
    pub label: String,
    pub residual: T,
    pub stderr: T,
}

/// Binned and orthogonality evidence that the flat-wise transform composed
/// with the projection is the conditional expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct CondExpReport<T: Real> {
    pub dim: usize,
    pub codim: usize,
    pub samples: usize,
    /// Bins per projection axis (total cells = bins_per_axis^codim).
    pub bins_per_axis: usize,
    /// The exact conditional curve in the projection coordinates.
    pub curve: HermiteSeries<T>,
    pub bins: Vec<BinStat<T>>,
    pub orthogonality: Vec<OrthoStat<T>>,
    pub warnings: Vec<String>,
}

impl<T: Real> CondExpReport<T> {
    /// Largest |empirical - predicted| / stderr over well-filled cells.
    pub fn max_bin_zscore(&self) -> T {
        self.bins
            .iter()
            .filter(|b| !b.low_count && b.stderr > T::zero())
            .map(|b| (b.empirical - b.predicted).abs() / b.stderr)
            .fold(T::zero(), |a, z| if z > a { z } else { a })
    }

    /// Largest |residual| / stderr over the orthogonality family.
    pub fn max_ortho_zscore(&self) -> T {
        self.orthogonality
            .iter()
            .filter(|o| o.stderr > T::zero())
            .map(|o| o.residual.abs() / o.stderr)
            .fold(T::zero(), |a, z| if z > a { z } else { a })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("dim = {}\n", self.dim));
        out.push_str(&format!("codim = {}\n", self.codim));
        out.push_str(&format!("samples = {}\n", self.samples));
        out.push_str(&format!("bins_per_axis = {}\n", self.bins_per_axis));
        out.push_str(&format!("max_bin_zscore = {}\n", self.max_bin_zscore()));
        out.push_str(&format!("max_ortho_zscore = {}\n", self.max_ortho_zscore()));
        for w in &self.warnings {
            out.push_str(&format!("warning = {w}\n"));
        }
        out.push_str("orthogonality:\n");
        for o in &self.orthogonality {
            out.push_str(&format!(
                "  {}: residual={} stderr={}\n",
                o.label, o.residual, o.stderr
            ));
        }
        out.push_str("bins:\n");
        let axes = (1..=self.codim)
            .map(|k| format!("center_{k}"))
            .collect::<Vec<_>>()
            .join(",");
        out.push_str(&format!(
            "  {axes},count,empirical,stderr,predicted,low_count\n"
        ));
        for b in &self.bins {
            let center = b
                .center
                .iter()
                .map(|c| format!("{c}"))
                .collect::<Vec<_>>()
                .join(",");
            out.push_str(&format!(
                "  {center},{},{},{},{},{}\n",
                b.count, b.empirical, b.stderr, b.predicted, b.low_count
            ));
        }
        out
    }
}

/// `integral of He_k against the Gaussian weight over [a, b]`; the
/// antiderivative of `-He_k phi` is `He_(k-1) phi`, and infinite endpoints
/// contribute nothing.
fn he_bin_integral(k: u32, a: f64, b: f64, gauss: &Normal) -> f64 {
    if k == 0 {
        return gauss.cdf(b) - gauss.cdf(a);
    }
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let boundary = |t: f64| {
        if t.is_finite() {
            he_value::<f64>(k - 1, t) * phi(t)
        } else {
            0.0
        }
    };
    boundary(a) - boundary(b)
}

/// Fewest draws for a meaningful bin mean; thinner bins are flagged and
/// skipped by the z-score summary.
const MIN_BIN_COUNT: usize = 50;

/// Binned-mean and orthogonality check that the conditional expectation of
/// `f` given the projection onto `span(normals)` is the flat-wise transform
/// curve. Supports one or two normal directions; `bins` is the total cell
/// budget (split evenly per axis in two dimensions); `samples >= 10_000`.
pub fn cond_exp_check<T: Real>(
    f: &HermiteSeries<T>,
    normals: &[Vec<T>],
    samples: usize,
    bins: usize,
    seed: u64,
) -> Result<CondExpReport<T>> {
    let (frame, dim) = normal_frame(normals)?;
    if f.dim() != dim {
        return Err(Error::DimensionMismatch {
            context: "binned check integrand",
            expected: dim,
            found: f.dim(),
        });
    }
    let n = frame.len();
    if n > 2 {
        return Err(Error::InvalidParameter {
            detail: format!("binned check supports 1 or 2 normal directions, got {n}"),
        });
    }
    if samples < 10_000 {
        return Err(Error::InvalidParameter {
            detail: format!("binned check needs at least 10000 samples, got {samples}"),
        });
    }
    let bins_per_axis = if n == 1 {
        bins
    } else {
        (bins as f64).sqrt().floor() as usize
    };
    if bins_per_axis < 2 {
        return Err(Error::InvalidParameter {
            detail: format!("bin budget {bins} leaves fewer than 2 bins per axis"),
        });
    }
    let curve = conditional_series(f, normals)?;

    // equal-probability bin edges
    let gauss = Normal::new(0.0, 1.0).expect("standard normal");
    let mut edges = vec![f64::NEG_INFINITY];
    for j in 1..bins_per_axis {
        edges.push(gauss.inverse_cdf(j as f64 / bins_per_axis as f64));
    }
    edges.push(f64::INFINITY);
    let axis_bin = |s: T| -> usize {
        let s = s.to_f64().unwrap();
        // edges[1..bins_per_axis] are the interior cut points
        edges[1..bins_per_axis].partition_point(|&e| e <= s)
    };

    // one substream per draw: (value, projection coords, cell index)
    let draws: Vec<(T, Vec<T>)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream_rng(seed, i as u64);
            let x: Vec<T> = (0..dim).map(|_| T::standard_normal(&mut rng)).collect();
            let s: Vec<T> = frame.iter().map(|u| linalg::dot(u, &x)).collect();
            Ok((f.evaluate(&x)?, s))
        })
        .collect::<Result<_>>()?;

    let cells = bins_per_axis.pow(n as u32);
    let mut count = vec![0usize; cells];
    let mut sum = vec![T::zero(); cells];
    let mut sum_sq = vec![T::zero(); cells];
    for (v, s) in &draws {
        let mut cell = 0;
        for &sk in s {
            cell = cell * bins_per_axis + axis_bin(sk);
        }
        count[cell] += 1;
        sum[cell] += *v;
        sum_sq[cell] += *v * *v;
    }

    // exact per-cell conditional means of the curve: rectangular cells make
    // them products of one-dimensional Gaussian bin integrals
    let axis_moment =
        |k: u32, bin: usize| -> f64 { he_bin_integral(k, edges[bin], edges[bin + 1], &gauss) };
    let mut bins_out = Vec::with_capacity(cells);
    let mut warnings = Vec::new();
    for cell in 0..cells {
        let axis_bins: Vec<usize> = if n == 1 {
            vec![cell]
        } else {
            vec![cell / bins_per_axis, cell % bins_per_axis]
        };
        let prob: f64 = axis_bins.iter().map(|&b| axis_moment(0, b)).product();
        let mut predicted = 0.0f64;
        for (m, c) in curve.terms() {
            let mut term = c.to_f64().unwrap();
            for (axis, &b) in axis_bins.iter().enumerate() {
                term *= axis_moment(m.exponents()[axis], b) / axis_moment(0, b);
            }
            predicted += term;
        }
        let center: Vec<T> = axis_bins
            .iter()
            .map(|&b| T::cast(axis_moment(1, b) / axis_moment(0, b)))
            .collect();
        let c = count[cell];
        let (empirical, stderr) = if c == 0 {
            (T::zero(), T::zero())
        } else {
            let cf = T::cast(c as f64);
            let mean = sum[cell] / cf;
            let stderr = if c == 1 {
                T::zero()
            } else {
                let var = (sum_sq[cell] - sum[cell] * sum[cell] / cf) / (cf - T::one());
                (var.max(T::zero()) / cf).sqrt()
            };
            (mean, stderr)
        };
        let low_count = c < MIN_BIN_COUNT;
        if low_count {
            warnings.push(format!(
                "cell {cell} holds {c} draws (expected about {:.0}); its mean is excluded",
                prob * samples as f64
            ));
        }
        bins_out.push(BinStat {
            center,
            count: c,
            empirical,
            stderr,
            predicted: T::cast(predicted),
            low_count,
        });
    }

    // orthogonality family: h in {1, each coordinate, each coordinate squared}
    type OrthoTest<T> = (String, Box<dyn Fn(&[T]) -> T + Sync>);
    let mut tests: Vec<OrthoTest<T>> = vec![("1".into(), Box::new(|_| T::one()))];
    for k in 0..n {
        tests.push((format!("s{}", k + 1), Box::new(move |s: &[T]| s[k])));
        tests.push((
            format!("s{}^2", k + 1),
            Box::new(move |s: &[T]| s[k] * s[k]),
        ));
    }
    let mut orthogonality = Vec::with_capacity(tests.len());
    for (label, h) in &tests {
        let vals: Vec<T> = draws
            .iter()
            .map(|(v, s)| {
                let g = curve.evaluate(s)?;
                Ok((*v - g) * h(s))
            })
            .collect::<Result<_>>()?;
        let cf = T::cast(samples as f64);
        let mean = vals.iter().copied().sum::<T>() / cf;
        let ss: T = vals.iter().map(|&v| (v - mean) * (v - mean)).sum();
        let stderr = (ss / (cf - T::one()) / cf).sqrt();
        orthogonality.push(OrthoStat {
            label: label.clone(),
            residual: mean,
            stderr,
        });
    }

    Ok(CondExpReport {
        dim,
        codim: n,
        samples,
        bins_per_axis,
        curve,
        bins: bins_out,
        orthogonality,
        warnings,
    })
}

/// Draws a standard Gaussian vector; exposed for callers composing their
/// own paired estimates.
pub fn standard_gaussian_vector<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<T> {
    (0..dim).map(|_| T::standard_normal(rng)).collect()
}
