//! Recovery of a Hermite series from its Radon profiles over finitely many
//! directions.
//!
//! The transform of `f` along direction `u` is a one-dimensional function
//! whose Hermite coefficients `a_(u,k)` are exactly the degree-`k` ray data
//! of the holomorphic image of `f`: `a_(u,k) = sum over |m| = k of
//! c_m u^m`. Each degree therefore decouples into a small linear system
//! over the directions. The pipeline is: profile -> 1D Hermite
//! coefficients (`profile_to_coeffs`), per-degree least squares over a
//! direction design (`make_design`, `solve_degree`), assembly of the
//! holomorphic series, and the inverse relabeling back to a Hermite series
//! (`reconstruct`). Conditioning, residuals, and noise amplification are
//! reported rather than hidden: the finite-direction problem's stability is
//! an empirical matter, and the diagnostics are how it is observed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::bargmann::{sb_inverse, HolomorphicSeries};
use crate::error::{Error, Result};
use crate::hermite::{he_values, HermiteSeries};
use crate::linalg;
use crate::multi_index::{monomial_count, monomials_of_degree, MultiIndex};
use crate::quadrature::gauss_hermite;
use crate::radon::{radon_profile, Engine, RadonProfile};
use crate::real::{mix_seed, substream_rng, Real};
use crate::tol;

/// Substream tag for design resampling, distinct from per-direction
/// profile substreams (which use small indices).
const DESIGN_STREAM: u64 = u64::MAX - 1;

/// How to choose measurement directions.
#[derive(Debug, Clone)]
pub enum DesignStrategy<T: Real> {
    /// Coordinate axes first, then seeded uniform sphere draws up to
    /// `count` directions in total. The default count is twice the number
    /// of degree-`k` monomials (oversampling keeps the least-squares
    /// systems tame), never below the dimension.
    AxesRandom { count: Option<usize> },
    /// A caller-chosen direction list (normalized here).
    Explicit(Vec<Vec<T>>),
}

/// Directions plus the degree-`k` monomial evaluation matrix
/// `V[j][m] = u_j^m` over `|m| = k` (graded order), with its conditioning.
#[derive(Debug, Clone)]
pub struct DirectionDesign<T: Real> {
    degree: u32,
    dim: usize,
    directions: Vec<Vec<T>>,
    indices: Vec<MultiIndex>,
    matrix: DMatrix<f64>,
    conditioning: f64,
}

impl<T: Real> DirectionDesign<T> {
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn directions(&self) -> &[Vec<T>] {
        &self.directions
    }

    /// Multi-indices labeling the matrix columns, in the graded order used
    /// everywhere in this crate.
    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn conditioning(&self) -> f64 {
        self.conditioning
    }

    pub fn matrix_entry(&self, row: usize, col: usize) -> f64 {
        self.matrix[(row, col)]
    }
}

fn unit_direction<T: Real>(dir: &[T]) -> Result<Vec<T>> {
    let norm = linalg::norm(dir);
    if norm == T::zero() {
        return Err(Error::DegenerateBasis {
            detail: "design direction is the zero vector".into(),
        });
    }
    Ok(linalg::scale(dir, T::one() / norm))
}

fn uniform_unit_vector<T: Real>(dim: usize, rng: &mut impl rand::Rng) -> Vec<T> {
    loop {
        let v: Vec<T> = (0..dim).map(|_| T::standard_normal(rng)).collect();
        if let Ok(u) = unit_direction(&v) {
            return u;
        }
    }
}

/// `V` and its singular-value ratio for one degree over the given unit
/// directions.
fn monomial_matrix<T: Real>(
    directions: &[Vec<T>],
    degree: u32,
    dim: usize,
) -> (Vec<MultiIndex>, DMatrix<f64>, f64) {
    let indices = monomials_of_degree(dim, degree);
    let matrix = DMatrix::from_fn(directions.len(), indices.len(), |j, col| {
        let mut v = 1.0f64;
        for (axis, &e) in indices[col].exponents().iter().enumerate() {
            v *= directions[j][axis].to_f64().unwrap().powi(e as i32);
        }
        v
    });
    let sv = matrix.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0f64, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let conditioning = if directions.len() < indices.len() || smin <= 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    };
    (indices, matrix, conditioning)
}

/// Builds the degree-`k` design. Random strategies resample up to 50 times
/// (substreams of `seed`) until the conditioning is at most
/// [`tol::DESIGN_CONDITION_MAX`]; failure reports the best conditioning
/// seen.
pub fn make_design<T: Real>(
    degree: u32,
    dim: usize,
    strategy: &DesignStrategy<T>,
    seed: u64,
) -> Result<DirectionDesign<T>> {
    if dim == 0 {
        return Err(Error::InvalidParameter {
            detail: "design dimension must be positive".into(),
        });
    }
    let needed = monomial_count(dim, degree);
    let build = |directions: Vec<Vec<T>>| -> (DirectionDesign<T>, f64) {
        let (indices, matrix, conditioning) = monomial_matrix(&directions, degree, dim);
        (
            DirectionDesign {
                degree,
                dim,
                directions,
                indices,
                matrix,
                conditioning,
            },
            conditioning,
        )
    };
    match strategy {
        DesignStrategy::Explicit(dirs) => {
            for d in dirs {
                if d.len() != dim {
                    return Err(Error::DimensionMismatch {
                        context: "design direction",
                        expected: dim,
                        found: d.len(),
                    });
                }
            }
            let unit: Vec<Vec<T>> = dirs
                .iter()
                .map(|d| unit_direction(d))
                .collect::<Result<_>>()?;
            let (design, cond) = build(unit);
            if cond > tol::DESIGN_CONDITION_MAX {
                return Err(Error::DesignFailure {
                    best_condition: cond,
                });
            }
            Ok(design)
        }
        DesignStrategy::AxesRandom { count } => {
            let count = count.unwrap_or_else(|| (2 * needed).max(dim));
            if count < needed {
                return Err(Error::InvalidParameter {
                    detail: format!(
                        "degree {degree} in dimension {dim} needs at least {needed} \
                         directions, got {count}"
                    ),
                });
            }
            let axes: Vec<Vec<T>> = (0..dim.min(count))
                .map(|i| {
                    let mut e = vec![T::zero(); dim];
                    e[i] = T::one();
                    e
                })
                .collect();
            let extra = count - axes.len();
            let mut best = f64::INFINITY;
            for attempt in 0..50u64 {
                let mut rng = substream_rng(mix_seed(seed, DESIGN_STREAM), attempt);
                let mut directions = axes.clone();
                directions.extend((0..extra).map(|_| uniform_unit_vector(dim, &mut rng)));
                let (design, cond) = build(directions);
                if cond <= tol::DESIGN_CONDITION_MAX {
                    return Ok(design);
                }
                best = best.min(cond);
            }
            Err(Error::DesignFailure {
                best_condition: best,
            })
        }
    }
}

/// Hermite coefficients of a one-dimensional profile, with the noise
/// amplification of the extraction and propagated standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCoeffs<T: Real> {
    /// `a_0 ... a_D`.
    pub coeffs: Vec<T>,
    /// Present when the profile carried standard errors.
    pub stderr: Option<Vec<T>>,
    /// Per-degree root-sum-square of the linear weights applied to the
    /// profile values: a unit of profile noise moves `a_k` by this much.
    pub amplification: Vec<T>,
    /// Which extraction ran: `node-grid` or `least-squares`.
    pub route: &'static str,
}

/// Extracts `a_k = E[g(t) He_k(t)] / k!` for `k <= max_degree` from a
/// profile.
///
/// On a Gauss-Hermite node grid of level at least `max_degree + 1` the
/// projections are quadrature sums, exact for polynomial profiles. Any
/// other grid falls back to Gaussian-weighted least squares against
/// `{He_0 ... He_D}`, which needs at least `2 (max_degree + 1)` points.
pub fn profile_to_coeffs<T: Real>(
    profile: &RadonProfile<T>,
    max_degree: u32,
) -> Result<ProfileCoeffs<T>> {
    let offsets = profile.offsets();
    let values = profile.values();
    let n_coeffs = max_degree as usize + 1;
    let level = offsets.len();

    let is_node_grid = level >= n_coeffs && {
        let (nodes, _) = gauss_hermite::<T>(level);
        offsets
            .iter()
            .zip(&nodes)
            .all(|(&t, &n)| (t - n).abs().to_f64().unwrap() <= tol::NODE_GRID_MATCH)
    };

    // row weights: a_k = sum_i w[k][i] * g_i
    let weights: Vec<Vec<T>> = if is_node_grid {
        let (nodes, ws) = gauss_hermite::<T>(level);
        let mut kfact = T::one();
        (0..n_coeffs)
            .map(|k| {
                if k > 0 {
                    kfact *= T::cast(k as f64);
                }
                nodes
                    .iter()
                    .zip(&ws)
                    .map(|(&t, &w)| w * he_values(max_degree, t)[k] / kfact)
                    .collect()
            })
            .collect()
    } else {
        if level < 2 * n_coeffs {
            return Err(Error::InsufficientGrid {
                needed: 2 * n_coeffs,
                found: level,
            });
        }
        // weighted least squares: rows sqrt(phi(t_i)) He_k(t_i)
        let sqrt_phi: Vec<f64> = offsets
            .iter()
            .map(|&t| {
                let t = t.to_f64().unwrap();
                ((-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()).sqrt()
            })
            .collect();
        let design = DMatrix::from_fn(level, n_coeffs, |i, k| {
            sqrt_phi[i] * he_values(max_degree, offsets[i].to_f64().unwrap())[k]
        });
        let svd = design.svd(true, true);
        let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
        let pinv = svd
            .pseudo_inverse(tol::SVD_CUTOFF * smax)
            .expect("singular vectors were computed");
        (0..n_coeffs)
            .map(|k| {
                (0..level)
                    .map(|i| T::cast(pinv[(k, i)] * sqrt_phi[i]))
                    .collect()
            })
            .collect()
    };

    let coeffs: Vec<T> = weights
        .iter()
        .map(|row| row.iter().zip(values).map(|(&w, &g)| w * g).sum())
        .collect();
    let amplification: Vec<T> = weights
        .iter()
        .map(|row| row.iter().map(|&w| w * w).sum::<T>().sqrt())
        .collect();
    let stderr = profile.stderr().map(|sigma| {
        weights
            .iter()
            .map(|row| {
                row.iter()
                    .zip(sigma)
                    .map(|(&w, &s)| w * s * w * s)
                    .sum::<T>()
                    .sqrt()
            })
            .collect()
    });
    Ok(ProfileCoeffs {
        coeffs,
        stderr,
        amplification,
        route: if is_node_grid {
            "node-grid"
        } else {
            "least-squares"
        },
    })
}

/// Solution of one degree's direction system.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeSolution<T: Real> {
    pub degree: u32,
    /// Multi-indices labeling `coeffs`, graded order.
    pub indices: Vec<MultiIndex>,
    pub coeffs: Vec<T>,
    /// Euclidean residual of the least-squares fit.
    pub residual: T,
    pub condition: f64,
    /// The residual exceeds ten times the propagated data noise: the data
    /// are not explained by a degree-`k` ray model.
    pub inconsistent: bool,
}

/// Least-squares solve of `V c = b` for one degree, `b` being the
/// per-direction profile coefficients of that degree. Singular values
/// below `1e-10` of the largest are cut.
pub fn solve_degree<T: Real>(
    design: &DirectionDesign<T>,
    b: &[T],
    stderr: Option<&[T]>,
) -> Result<DegreeSolution<T>> {
    if b.len() != design.directions.len() {
        return Err(Error::DimensionMismatch {
            context: "per-direction coefficients",
            expected: design.directions.len(),
            found: b.len(),
        });
    }
    let bv = DVector::from_iterator(b.len(), b.iter().map(|v| v.to_f64().unwrap()));
    let svd = design.matrix.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let c = svd
        .solve(&bv, tol::SVD_CUTOFF * smax)
        .map_err(|_| Error::DesignFailure {
            best_condition: design.conditioning,
        })?;
    let residual_vec = &design.matrix * &c - &bv;
    let residual = residual_vec.norm();
    let noise = stderr
        .map(|s| {
            s.iter()
                .map(|v| {
                    let v = v.to_f64().unwrap();
                    v * v
                })
                .sum::<f64>()
                .sqrt()
        })
        .unwrap_or(0.0);
    // small absolute floor so exact-data rounding never trips the flag
    let inconsistent = residual > 10.0 * noise + 1e-9 * bv.norm().max(1.0);
    Ok(DegreeSolution {
        degree: design.degree,
        indices: design.indices.clone(),
        coeffs: c.iter().map(|&v| T::cast(v)).collect(),
        residual: T::cast(residual),
        condition: design.conditioning,
        inconsistent,
    })
}

/// Where the profiles come from.
pub enum ProfileSource<T: Real> {
    /// Generate profiles of a known series on a Gauss-Hermite offset grid,
    /// one per design direction, with the given engine. Recovery error
    /// against this truth is reported.
    Truth { f: HermiteSeries<T>, engine: Engine },
    /// Use stored profiles; their directions become the design and their
    /// standard errors propagate into the solves.
    Profiles(Vec<RadonProfile<T>>),
}

/// Per-degree entry of a reconstruction report.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDiagnostics<T: Real> {
    pub degree: u32,
    pub condition: f64,
    pub residual: T,
    /// Largest imaginary part among the degree's assembled holomorphic
    /// coefficients. Real ray data make this identically zero; it is kept
    /// so complex-valued ray sources report their solver noise here.
    pub imag_leakage: T,
    pub inconsistent: bool,
}

/// Per-direction profile-extraction diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileFit<T: Real> {
    pub direction: Vec<T>,
    pub route: &'static str,
    pub amplification: Vec<T>,
    pub stderr: Option<Vec<T>>,
}

/// Full output of [`reconstruct`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionReport<T: Real> {
    pub recovered: HermiteSeries<T>,
    pub degrees: Vec<DegreeDiagnostics<T>>,
    pub profile_fits: Vec<ProfileFit<T>>,
    /// Largest coefficient deviation from the truth, when the source
    /// carried one (union of stored terms on both sides).
    pub coeff_max_error: Option<T>,
}

impl<T: Real> ReconstructionReport<T> {
    pub fn max_condition(&self) -> f64 {
        self.degrees.iter().map(|d| d.condition).fold(0.0, f64::max)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("dim = {}\n", self.recovered.dim()));
        out.push_str(&format!(
            "recovered_terms = {}\n",
            self.recovered.num_terms()
        ));
        out.push_str(&format!("directions = {}\n", self.profile_fits.len()));
        if let Some(e) = self.coeff_max_error {
            out.push_str(&format!("coeff_max_error = {e}\n"));
        }
        out.push_str("degrees:\n");
        for d in &self.degrees {
            out.push_str(&format!(
                "  k={}: condition={} residual={} imag_leakage={} inconsistent={}\n",
                d.degree, d.condition, d.residual, d.imag_leakage, d.inconsistent
            ));
        }
        out.push_str("profile_fits:\n");
        for (j, fit) in self.profile_fits.iter().enumerate() {
            let dir = fit
                .direction
                .iter()
                .map(|v| format!("{v}"))
                .collect::<Vec<_>>()
                .join(",");
            let amp = fit
                .amplification
                .iter()
                .map(|v| format!("{v}"))
                .collect::<Vec<_>>()
                .join(",");
            out.push_str(&format!(
                "  j={j}: route={} direction=[{dir}] amplification=[{amp}]\n",
                fit.route
            ));
            if let Some(s) = &fit.stderr {
                let s = s
                    .iter()
                    .map(|v| format!("{v}"))
                    .collect::<Vec<_>>()
                    .join(",");
                out.push_str(&format!("  j={j}: coeff_stderr=[{s}]\n"));
            }
        }
        out
    }
}

/// Runs the full inversion: profiles -> per-direction coefficients ->
/// per-degree solves -> holomorphic assembly -> inverse relabeling.
///
/// One direction set serves every degree up to `max_degree`. For the
/// truth source it comes from `strategy` (resampled until every degree's
/// conditioning passes); for stored profiles the strategy is ignored and
/// their own directions are used. Monte Carlo profile generation runs
/// direction `j` on substream `j` of `seed`.
pub fn reconstruct<T: Real>(
    source: &ProfileSource<T>,
    max_degree: u32,
    strategy: &DesignStrategy<T>,
    seed: u64,
) -> Result<ReconstructionReport<T>> {
    // direction set and per-direction profile coefficients
    let (dim, directions, fits, truth) = match source {
        ProfileSource::Truth { f, engine } => {
            let dim = f.dim();
            let directions = pick_direction_set(max_degree, dim, strategy, seed)?;
            let grid = crate::radon::gh_offset_grid::<T>(max_degree as usize + 1);
            let fits = directions
                .iter()
                .enumerate()
                .map(|(j, u)| {
                    let engine_j = match engine {
                        Engine::MonteCarlo { samples, seed: s } => Engine::MonteCarlo {
                            samples: *samples,
                            seed: mix_seed(mix_seed(seed, *s), j as u64),
                        },
                        e => *e,
                    };
                    let profile = radon_profile(&f.clone().into(), u, &grid, engine_j)?;
                    profile_to_coeffs(&profile, max_degree)
                })
                .collect::<Result<Vec<_>>>()?;
            (dim, directions, fits, Some(f))
        }
        ProfileSource::Profiles(profiles) => {
            if profiles.is_empty() {
                return Err(Error::InvalidParameter {
                    detail: "reconstruction needs at least one profile".into(),
                });
            }
            let dim = profiles[0].dim();
            for p in profiles {
                if p.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        context: "profile dimensions",
                        expected: dim,
                        found: p.dim(),
                    });
                }
            }
            let directions: Vec<Vec<T>> = profiles.iter().map(|p| p.direction().to_vec()).collect();
            let fits = profiles
                .iter()
                .map(|p| profile_to_coeffs(p, max_degree))
                .collect::<Result<Vec<_>>>()?;
            (dim, directions, fits, None)
        }
    };

    // per-degree solves over the shared directions
    let mut holo_terms: Vec<(MultiIndex, Complex<T>)> = Vec::new();
    let mut degrees = Vec::with_capacity(max_degree as usize + 1);
    for k in 0..=max_degree {
        let design = make_design(k, dim, &DesignStrategy::Explicit(directions.clone()), seed)?;
        let b: Vec<T> = fits.iter().map(|f| f.coeffs[k as usize]).collect();
        let stderr: Option<Vec<T>> = fits
            .iter()
            .map(|f| f.stderr.as_ref().map(|s| s[k as usize]))
            .collect();
        let solution = solve_degree(&design, &b, stderr.as_deref())?;
        for (m, &c) in solution.indices.iter().zip(&solution.coeffs) {
            holo_terms.push((m.clone(), Complex::new(c, T::zero())));
        }
        degrees.push(DegreeDiagnostics {
            degree: k,
            condition: solution.condition,
            residual: solution.residual,
            imag_leakage: T::zero(),
            inconsistent: solution.inconsistent,
        });
    }

    let assembled = HolomorphicSeries::from_terms(dim, holo_terms)?;
    let recovered = sb_inverse(&assembled)?;

    let coeff_max_error = truth.map(|f| {
        let mut max = T::zero();
        for (m, c) in f.terms() {
            let e = (recovered.coeff(m) - c).abs();
            if e > max {
                max = e;
            }
        }
        for (m, c) in recovered.terms() {
            let e = (f.coeff(m) - c).abs();
            if e > max {
                max = e;
            }
        }
        max
    });

    let profile_fits = directions
        .into_iter()
        .zip(fits)
        .map(|(direction, fit)| ProfileFit {
            direction,
            route: fit.route,
            amplification: fit.amplification,
            stderr: fit.stderr,
        })
        .collect();

    Ok(ReconstructionReport {
        recovered,
        degrees,
        profile_fits,
        coeff_max_error,
    })
}

/// Realizes a direction set valid for every degree up to `max_degree`:
/// each degree's design over the same directions must pass the
/// conditioning bar, resampling the random part as needed.
fn pick_direction_set<T: Real>(
    max_degree: u32,
    dim: usize,
    strategy: &DesignStrategy<T>,
    seed: u64,
) -> Result<Vec<Vec<T>>> {
    match strategy {
        DesignStrategy::Explicit(dirs) => dirs
            .iter()
            .map(|d| unit_direction(d))
            .collect::<Result<_>>(),
        DesignStrategy::AxesRandom { count } => {
            let needed = monomial_count(dim, max_degree);
            let count = count.unwrap_or_else(|| (2 * needed).max(dim));
            if count < needed {
                return Err(Error::InvalidParameter {
                    detail: format!(
                        "degree {max_degree} in dimension {dim} needs at least {needed} \
                         directions, got {count}"
                    ),
                });
            }
            let axes: Vec<Vec<T>> = (0..dim.min(count))
                .map(|i| {
                    let mut e = vec![T::zero(); dim];
                    e[i] = T::one();
                    e
                })
                .collect();
            let extra = count - axes.len();
            let mut best = f64::INFINITY;
            for attempt in 0..50u64 {
                let mut rng = substream_rng(mix_seed(seed, DESIGN_STREAM), attempt);
                let mut directions = axes.clone();
                directions.extend((0..extra).map(|_| uniform_unit_vector(dim, &mut rng)));
                let worst = (0..=max_degree)
                    .map(|k| monomial_matrix(&directions, k, dim).2)
                    .fold(0.0f64, f64::max);
                if worst <= tol::DESIGN_CONDITION_MAX {
                    return Ok(directions);
                }
                best = best.min(worst);
            }
            Err(Error::DesignFailure {
                best_condition: best,
            })
        }
    }
}
