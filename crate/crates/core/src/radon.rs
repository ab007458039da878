//! The Gaussian Radon transform: the expectation of a function under the
//! Gaussian measure concentrated on a flat, computed by one of three
//! engines, plus profiles of the transform along a family of parallel
//! hyperplanes and their CSV form.
//!
//! - `exact`: closed form through the moment oracle (series only);
//! - `quadrature`: tensor Gauss-Hermite over the flat's tangent
//!   coordinates, available while the integration dimension stays small;
//! - `mc`: seeded Monte Carlo with a reported standard error, one
//!   substream per sample so results are thread-count independent.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gauss::{Flat, SubspaceGaussian};
use crate::hermite::{expect_under, Integrand};
use crate::linalg;
use crate::quadrature::{for_each_tensor_node, gauss_hermite};
use crate::real::{mix_seed, substream_rng, Real};
use crate::tol;

/// How to evaluate the defining integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    /// Moment-oracle closed form; requires a Hermite series.
    Exact,
    /// Tensor Gauss-Hermite with `level` nodes per tangent axis; requires
    /// at most [`tol::MAX_TENSOR_DIM`] tangent dimensions.
    Quadrature { level: usize },
    /// Sample mean over `samples` draws seeded from `seed`; reports the
    /// standard error of the mean. `samples = 0` never runs: it is the tag
    /// carried by synthetic-noise profiles (see
    /// [`RadonProfile::with_noise`]).
    MonteCarlo { samples: usize, seed: u64 },
}

impl Engine {
    pub fn label(&self) -> &'static str {
        match self {
            Engine::Exact => "exact",
            Engine::Quadrature { .. } => "quadrature",
            Engine::MonteCarlo { .. } => "mc",
        }
    }

    /// Whether values produced by this engine carry standard errors.
    pub fn is_stochastic(&self) -> bool {
        matches!(self, Engine::MonteCarlo { .. })
    }
}

/// `integral of f` under the measure on `flat`, with a standard error for
/// the stochastic engine.
pub fn gauss_radon<T: Real>(
    f: &Integrand<T>,
    flat: &Flat<T>,
    engine: Engine,
) -> Result<(T, Option<T>)> {
    if f.dim() != flat.dim() {
        return Err(Error::DimensionMismatch {
            context: "Radon integrand",
            expected: flat.dim(),
            found: f.dim(),
        });
    }
    match engine {
        Engine::Exact => {
            let series = f.as_series().ok_or(Error::SeriesRequired {
                op: "the exact Radon engine",
            })?;
            let g = SubspaceGaussian::new(flat.clone());
            Ok((expect_under(series, &g)?, None))
        }
        Engine::Quadrature { level } => {
            if level == 0 {
                return Err(Error::InvalidParameter {
                    detail: "quadrature level must be positive".into(),
                });
            }
            let free = flat.dim() - flat.codim();
            if free > tol::MAX_TENSOR_DIM {
                return Err(Error::EngineUnavailable {
                    detail: format!(
                        "quadrature engine integrates over {free} tangent dimensions; \
                         the limit is {} (use the mc engine)",
                        tol::MAX_TENSOR_DIM
                    ),
                });
            }
            let tangent = linalg::complete_basis(flat.normals(), flat.dim());
            let mut acc = T::zero();
            let mut failure: Option<Error> = None;
            let mut x = vec![T::zero(); flat.dim()];
            for_each_tensor_node(level, free, |w, z: &[T]| {
                if failure.is_some() {
                    return;
                }
                x.copy_from_slice(flat.offset());
                for (axis, &zi) in z.iter().enumerate() {
                    for (xj, &ej) in x.iter_mut().zip(&tangent[axis]) {
                        *xj += zi * ej;
                    }
                }
                match f.evaluate(&x) {
                    Ok(v) => acc += w * v,
                    Err(e) => failure = Some(e),
                }
            })?;
            if let Some(e) = failure {
                return Err(e);
            }
            Ok((acc, None))
        }
        Engine::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidParameter {
                    detail: "mc engine needs at least one sample".into(),
                });
            }
            let g = SubspaceGaussian::new(flat.clone());
            let values: Vec<T> = (0..samples)
                .into_par_iter()
                .map(|i| {
                    let mut rng = substream_rng(seed, i as u64);
                    f.evaluate(&g.sample_with(&mut rng))
                })
                .collect::<Result<_>>()?;
            // sequential two-pass reduction: identical for every thread count
            let n = T::cast(samples as f64);
            let mean = values.iter().copied().sum::<T>() / n;
            let stderr = if samples == 1 {
                T::zero()
            } else {
                let ss: T = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>();
                (ss / (n - T::one()) / n).sqrt()
            };
            Ok((mean, Some(stderr)))
        }
    }
}

/// The transform along one direction: values over a strictly increasing
/// offset grid of hyperplanes `t u + u_perp`, with standard errors exactly
/// when the engine is stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct RadonProfile<T: Real> {
    direction: Vec<T>,
    offsets: Vec<T>,
    values: Vec<T>,
    stderr: Option<Vec<T>>,
    engine: Engine,
}

impl<T: Real> RadonProfile<T> {
    /// Validating constructor: unit direction, increasing offsets, matching
    /// lengths, standard errors present iff the engine is stochastic.
    pub fn new(
        direction: Vec<T>,
        offsets: Vec<T>,
        values: Vec<T>,
        stderr: Option<Vec<T>>,
        engine: Engine,
    ) -> Result<Self> {
        let norm = linalg::norm(&direction).to_f64().unwrap();
        if (norm - 1.0).abs() > tol::UNIT_NORM {
            return Err(Error::InvalidParameter {
                detail: format!("profile direction has norm {norm}, expected 1"),
            });
        }
        if values.len() != offsets.len() {
            return Err(Error::DimensionMismatch {
                context: "profile values",
                expected: offsets.len(),
                found: values.len(),
            });
        }
        if offsets.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter {
                detail: "profile offsets must be strictly increasing".into(),
            });
        }
        if let Some(s) = &stderr {
            if s.len() != offsets.len() {
                return Err(Error::DimensionMismatch {
                    context: "profile stderr",
                    expected: offsets.len(),
                    found: s.len(),
                });
            }
        }
        if stderr.is_some() != engine.is_stochastic() {
            return Err(Error::InvalidParameter {
                detail: "standard errors must be present exactly for the mc engine".into(),
            });
        }
        Ok(Self {
            direction,
            offsets,
            values,
            stderr,
            engine,
        })
    }

    pub fn direction(&self) -> &[T] {
        &self.direction
    }

    pub fn offsets(&self) -> &[T] {
        &self.offsets
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn stderr(&self) -> Option<&[T]> {
        self.stderr.as_deref()
    }

    pub fn engine(&self) -> Engine {
        self.engine
    }

    pub fn dim(&self) -> usize {
        self.direction.len()
    }

    /// Copy with seeded Gaussian noise of scale `sigma` added to every value
    /// and `sigma` declared as the per-point standard error. This is the
    /// synthetic stand-in for a sampling profile of prescribed accuracy,
    /// used in noise-robustness experiments; the engine tag becomes `mc`
    /// with a zero sample count to mark the provenance.
    pub fn with_noise(&self, sigma: T, seed: u64) -> Self {
        let values: Vec<T> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let mut rng = substream_rng(seed, i as u64);
                v + sigma * T::standard_normal(&mut rng)
            })
            .collect();
        Self {
            direction: self.direction.clone(),
            offsets: self.offsets.clone(),
            values,
            stderr: Some(vec![sigma; self.offsets.len()]),
            engine: Engine::MonteCarlo { samples: 0, seed },
        }
    }

    /// CSV form: one metadata comment line (dimension, full-precision
    /// direction, engine, engine parameters), a column header, then
    /// `t,value,stderr` rows with the stderr cell empty for deterministic
    /// engines.
    pub fn to_csv_string(&self) -> String {
        let u = self
            .direction
            .iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(",");
        let engine = match self.engine {
            Engine::Exact => "engine=exact".to_string(),
            Engine::Quadrature { level } => format!("engine=quadrature level={level}"),
            Engine::MonteCarlo { samples, seed } => {
                format!("engine=mc seed={seed} samples={samples}")
            }
        };
        let mut out = format!("# d={} u=[{u}] {engine}\nt,value,stderr\n", self.dim());
        for i in 0..self.offsets.len() {
            let s = match &self.stderr {
                Some(s) => format!("{}", s[i]),
                None => String::new(),
            };
            out.push_str(&format!("{},{},{s}\n", self.offsets[i], self.values[i]));
        }
        out
    }

    /// Parses [`Self::to_csv_string`] output. Leading comment lines other
    /// than the profile metadata line (for example an embedded run
    /// configuration) are ignored.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let bad = |detail: String| Error::Format { detail };
        let mut direction: Option<Vec<T>> = None;
        let mut engine: Option<Engine> = None;
        let mut rows: Vec<(T, T, Option<T>)> = Vec::new();
        let mut in_rows = false;
        for line in text.lines() {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let meta = meta.trim();
                if meta.starts_with("d=") && meta.contains("u=[") {
                    let (dir, eng) = parse_profile_meta::<T>(meta)?;
                    direction = Some(dir);
                    engine = Some(eng);
                }
                continue;
            }
            if line == "t,value,stderr" {
                in_rows = true;
                continue;
            }
            if !in_rows {
                return Err(bad(format!(
                    "unexpected line before column header: {line:?}"
                )));
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 3 {
                return Err(bad(format!(
                    "expected 3 cells, got {}: {line:?}",
                    cells.len()
                )));
            }
            let t: f64 = cells[0]
                .parse()
                .map_err(|_| bad(format!("bad offset {:?}", cells[0])))?;
            let v: f64 = cells[1]
                .parse()
                .map_err(|_| bad(format!("bad value {:?}", cells[1])))?;
            let s: Option<T> = if cells[2].is_empty() {
                None
            } else {
                Some(T::cast(
                    cells[2]
                        .parse::<f64>()
                        .map_err(|_| bad(format!("bad stderr {:?}", cells[2])))?,
                ))
            };
            rows.push((T::cast(t), T::cast(v), s));
        }
        let direction = direction.ok_or_else(|| bad("missing profile metadata line".into()))?;
        let engine = engine.expect("engine parsed with direction");
        let offsets: Vec<T> = rows.iter().map(|r| r.0).collect();
        let values: Vec<T> = rows.iter().map(|r| r.1).collect();
        let stderr: Option<Vec<T>> = if engine.is_stochastic() {
            Some(
                rows.iter()
                    .map(|r| {
                        r.2.ok_or_else(|| bad("mc profile row lacks a stderr".into()))
                    })
                    .collect::<Result<_>>()?,
            )
        } else {
            if rows.iter().any(|r| r.2.is_some()) {
                return Err(bad("deterministic profile carries stderr cells".into()));
            }
            None
        };
        Self::new(direction, offsets, values, stderr, engine)
    }
}

fn parse_profile_meta<T: Real>(meta: &str) -> Result<(Vec<T>, Engine)> {
    let bad = |detail: String| Error::Format { detail };
    let ustart = meta.find("u=[").ok_or_else(|| bad("missing u=[".into()))?;
    let uend = meta[ustart..]
        .find(']')
        .map(|i| i + ustart)
        .ok_or_else(|| bad("unterminated direction list".into()))?;
    let direction: Vec<T> = meta[ustart + 3..uend]
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map(T::cast)
                .map_err(|_| bad(format!("bad direction component {s:?}")))
        })
        .collect::<Result<_>>()?;
    let mut engine_name = None;
    let mut level = None;
    let mut seed = None;
    let mut samples = None;
    for token in meta[uend + 1..].split_whitespace() {
        if let Some(v) = token.strip_prefix("engine=") {
            engine_name = Some(v.to_string());
        } else if let Some(v) = token.strip_prefix("level=") {
            level = v.parse::<usize>().ok();
        } else if let Some(v) = token.strip_prefix("seed=") {
            seed = v.parse::<u64>().ok();
        } else if let Some(v) = token.strip_prefix("samples=") {
            samples = v.parse::<usize>().ok();
        }
    }
    let engine = match engine_name.as_deref() {
        Some("exact") => Engine::Exact,
        Some("quadrature") => Engine::Quadrature {
            level: level.ok_or_else(|| bad("quadrature profile lacks level".into()))?,
        },
        Some("mc") => Engine::MonteCarlo {
            samples: samples.ok_or_else(|| bad("mc profile lacks samples".into()))?,
            seed: seed.ok_or_else(|| bad("mc profile lacks seed".into()))?,
        },
        other => return Err(bad(format!("unknown engine {other:?}"))),
    };
    Ok((direction, engine))
}

/// The transform along direction `u` (normalized here) over `offsets`.
///
/// For the stochastic engine, offset `i` runs on substream `i` of the
/// engine seed, so the profile is reproducible pointwise and independent of
/// evaluation order.
pub fn radon_profile<T: Real>(
    f: &Integrand<T>,
    u: &[T],
    offsets: &[T],
    engine: Engine,
) -> Result<RadonProfile<T>> {
    let norm = linalg::norm(u);
    if norm == T::zero() {
        return Err(Error::DegenerateBasis {
            detail: "profile direction is the zero vector".into(),
        });
    }
    let unit = linalg::scale(u, T::one() / norm);
    let mut values = Vec::with_capacity(offsets.len());
    let mut errs = Vec::with_capacity(offsets.len());
    for (i, &t) in offsets.iter().enumerate() {
        let point_engine = match engine {
            Engine::MonteCarlo { samples, seed } => Engine::MonteCarlo {
                samples,
                seed: mix_seed(seed, i as u64),
            },
            e => e,
        };
        let flat = Flat::hyperplane(&unit, t)?;
        let (v, s) = gauss_radon(f, &flat, point_engine)?;
        values.push(v);
        errs.push(s);
    }
    let stderr = if engine.is_stochastic() {
        Some(
            errs.into_iter()
                .map(|s| s.unwrap_or_else(T::zero))
                .collect(),
        )
    } else {
        None
    };
    RadonProfile::new(unit, offsets.to_vec(), values, stderr, engine)
}

/// Offset grid matched to coefficient extraction: the nodes of the
/// `level`-point Gauss-Hermite rule for the standard Gaussian (ascending).
/// Profiles sampled on this grid integrate exactly against the Gaussian
/// weight up to polynomial degree `2*level - 1`.
pub fn gh_offset_grid<T: Real>(level: usize) -> Vec<T> {
    gauss_hermite::<T>(level).0
}
