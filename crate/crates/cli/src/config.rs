//! TOML run configurations: schema, validation, seed resolution, and the
//! resolved-config header embedded in every output file.
//!
//! Each subcommand has one top-level config type. Loading is strict where
//! TOML allows (unknown keys in plain tables are rejected); semantic
//! validation happens in the `resolve_*` methods so that every schema
//! problem surfaces before any computation starts. Seeds are resolved in
//! place: a `--seed` flag replaces every seed in the config, and absent
//! seeds default to 0, so the serialized header always shows the values
//! the run actually used.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use gauss_radon::disintegration::OuterEngine;
use gauss_radon::hermite::{HermiteSeries, Integrand, PointFunction};
use gauss_radon::inversion::DesignStrategy;
use gauss_radon::multi_index::MultiIndex;
use gauss_radon::radon::{gh_offset_grid, Engine};

use crate::CliError;

fn config_err(detail: impl Into<String>) -> CliError {
    CliError::Config(detail.into())
}

/// Reads and parses a TOML config file.
pub fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

/// Directory against which relative artifact paths in a config resolve.
pub fn base_dir(config_path: &Path) -> PathBuf {
    config_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Reads a text artifact as is; for formats whose parser skips comment
/// lines itself (profile CSVs).
pub fn read_raw(dir: &Path, name: &str) -> Result<String, CliError> {
    let path = dir.join(name);
    fs::read_to_string(&path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))
}

/// Reads a text artifact, dropping any leading `#` comment lines (the
/// embedded run-config header of a previously emitted file); for formats
/// that cannot carry comments (series JSON).
pub fn read_artifact(dir: &Path, name: &str) -> Result<String, CliError> {
    Ok(strip_header(&read_raw(dir, name)?))
}

/// Drops leading `#` comment lines and blank lines.
fn strip_header(text: &str) -> String {
    let mut body = String::new();
    let mut in_body = false;
    for line in text.lines() {
        if !in_body && (line.starts_with('#') || line.trim().is_empty()) {
            continue;
        }
        in_body = true;
        body.push_str(line);
        body.push('\n');
    }
    body
}

/// The resolved config as `#`-prefixed header lines, preceded by the
/// subcommand that ran. Prepended to every output file.
pub fn header(command: &str, resolved: &impl Serialize) -> String {
    let text = toml::to_string(resolved).expect("run configs serialize to TOML");
    let mut out = format!("# gauss-radon {command}\n# config:\n");
    for line in text.lines() {
        if line.is_empty() {
            out.push_str("#\n");
        } else {
            out.push_str("#   ");
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}

/// Seed-resolution rule shared by every seed field: the flag wins, then
/// the config value, then 0.
fn resolve_seed_field(field: &mut Option<u64>, flag: Option<u64>) {
    *field = Some(flag.or(*field).unwrap_or(0));
}

/// One Hermite term: exponent multi-index and coefficient.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

/// A function on `R^dim`, given exactly one way: a point-function registry
/// name, a path to a series JSON file, or inline Hermite terms.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub registry: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series_json: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<TermSpec>>,
}

impl FunctionSpec {
    fn check_exactly_one(&self) -> Result<(), CliError> {
        let given = [
            self.registry.is_some(),
            self.series_json.is_some(),
            self.terms.is_some(),
        ]
        .iter()
        .filter(|b| **b)
        .count();
        if given != 1 {
            return Err(config_err(
                "function needs exactly one of registry, series_json, terms",
            ));
        }
        Ok(())
    }

    /// The function as an integrand; series variants stay exact-capable.
    pub fn resolve(&self, dir: &Path) -> Result<Integrand<f64>, CliError> {
        self.check_exactly_one()?;
        if let Some(name) = &self.registry {
            let f = PointFunction::from_registry(name, self.dim)
                .map_err(|e| config_err(e.to_string()))?;
            return Ok(f.into());
        }
        Ok(self.resolve_series(dir)?.into())
    }

    /// The function as a Hermite series; registry point functions are
    /// rejected because the caller needs closed-form structure.
    pub fn resolve_series(&self, dir: &Path) -> Result<HermiteSeries<f64>, CliError> {
        self.check_exactly_one()?;
        if let Some(name) = &self.series_json {
            let body = read_artifact(dir, name)?;
            let series = HermiteSeries::from_json_str(&body)
                .map_err(|e| config_err(format!("{name}: {e}")))?;
            if series.dim() != self.dim {
                return Err(config_err(format!(
                    "{name} has dimension {}, config says {}",
                    series.dim(),
                    self.dim
                )));
            }
            return Ok(series);
        }
        if let Some(terms) = &self.terms {
            return HermiteSeries::from_terms(
                self.dim,
                terms
                    .iter()
                    .map(|t| (MultiIndex::new(t.exponents.clone()), t.coeff)),
            )
            .map_err(|e| config_err(e.to_string()));
        }
        Err(config_err(
            "this operation needs a series function (series_json or terms)",
        ))
    }
}

/// Engine selection for the transform (`kind = "exact" | "quadrature" |
/// "mc"` plus the matching parameters).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EngineSpec {
    Exact,
    Quadrature {
        level: usize,
    },
    Mc {
        samples: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

impl EngineSpec {
    pub fn resolve_seeds(&mut self, flag: Option<u64>) {
        if let EngineSpec::Mc { seed, .. } = self {
            resolve_seed_field(seed, flag);
        }
    }

    pub fn to_engine(&self) -> Result<Engine, CliError> {
        match self {
            EngineSpec::Exact => Ok(Engine::Exact),
            EngineSpec::Quadrature { level } => {
                if *level == 0 {
                    return Err(config_err("quadrature level must be positive"));
                }
                Ok(Engine::Quadrature { level: *level })
            }
            EngineSpec::Mc { samples, seed } => {
                if *samples == 0 {
                    return Err(config_err("mc engine needs samples >= 1"));
                }
                Ok(Engine::MonteCarlo {
                    samples: *samples,
                    seed: seed.expect("seeds are resolved before use"),
                })
            }
        }
    }
}

/// Outer engine of a disintegration check (no exact variant: the outer
/// integral is always quadrature or Monte Carlo).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OuterEngineSpec {
    Quadrature {
        level: usize,
    },
    Mc {
        samples: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

impl OuterEngineSpec {
    pub fn resolve_seeds(&mut self, flag: Option<u64>) {
        if let OuterEngineSpec::Mc { seed, .. } = self {
            resolve_seed_field(seed, flag);
        }
    }

    pub fn to_engine(&self) -> Result<OuterEngine, CliError> {
        match self {
            OuterEngineSpec::Quadrature { level } => {
                if *level == 0 {
                    return Err(config_err("outer quadrature level must be positive"));
                }
                Ok(OuterEngine::Quadrature { level: *level })
            }
            OuterEngineSpec::Mc { samples, seed } => {
                if *samples == 0 {
                    return Err(config_err("outer mc engine needs samples >= 1"));
                }
                Ok(OuterEngine::MonteCarlo {
                    samples: *samples,
                    seed: seed.expect("seeds are resolved before use"),
                })
            }
        }
    }
}

/// Offset grid for profiles: a uniform grid, the Gauss-Hermite nodes of a
/// level, or explicit values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OffsetSpec {
    Uniform { min: f64, max: f64, count: usize },
    GaussHermite { level: usize },
    Explicit { values: Vec<f64> },
}

impl OffsetSpec {
    pub fn build(&self) -> Result<Vec<f64>, CliError> {
        let offsets = match self {
            OffsetSpec::Uniform { min, max, count } => {
                // partial_cmp so that NaN bounds fail validation too
                let increasing = matches!(max.partial_cmp(min), Some(std::cmp::Ordering::Greater));
                if *count < 2 || !increasing {
                    return Err(config_err("uniform offsets need count >= 2 and max > min"));
                }
                (0..*count)
                    .map(|i| min + (max - min) * i as f64 / (*count - 1) as f64)
                    .collect()
            }
            OffsetSpec::GaussHermite { level } => {
                if *level == 0 {
                    return Err(config_err("offset grid level must be positive"));
                }
                gh_offset_grid(*level)
            }
            OffsetSpec::Explicit { values } => values.clone(),
        };
        if offsets.is_empty() || offsets.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_err(
                "offsets must be nonempty and strictly increasing",
            ));
        }
        Ok(offsets)
    }
}

/// Direction set for reconstruction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DesignSpec {
    AxesRandom {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        count: Option<usize>,
    },
    Explicit {
        directions: Vec<Vec<f64>>,
    },
}

impl DesignSpec {
    pub fn to_strategy(&self) -> DesignStrategy<f64> {
        match self {
            DesignSpec::AxesRandom { count } => DesignStrategy::AxesRandom { count: *count },
            DesignSpec::Explicit { directions } => DesignStrategy::Explicit(directions.clone()),
        }
    }
}

fn default_design() -> DesignSpec {
    DesignSpec::AxesRandom { count: None }
}

/// One profile direction (normalized by the run).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionSpec {
    pub u: Vec<f64>,
}

/// `radon`: one profile CSV per direction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadonConfig {
    pub function: FunctionSpec,
    pub directions: Vec<DirectionSpec>,
    pub offsets: OffsetSpec,
    pub engine: EngineSpec,
}

impl RadonConfig {
    pub fn resolve_seeds(&mut self, flag: Option<u64>) {
        self.engine.resolve_seeds(flag);
    }
}

fn default_tolerance() -> f64 {
    1e-8
}

/// `disintegrate`: both sides of the factorization identity plus a
/// verdict at the configured tolerance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisintegrateConfig {
    pub function: FunctionSpec,
    pub normals: Vec<Vec<f64>>,
    /// Residual allowance on top of 3 combined standard errors.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    pub inner: EngineSpec,
    pub outer: OuterEngineSpec,
}

impl DisintegrateConfig {
    pub fn resolve_seeds(&mut self, flag: Option<u64>) {
        self.inner.resolve_seeds(flag);
        self.outer.resolve_seeds(flag);
    }
}

/// `condexp`: binned conditional-expectation diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CondexpConfig {
    pub function: FunctionSpec,
    pub normals: Vec<Vec<f64>>,
    pub samples: usize,
    pub bins: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl CondexpConfig {
    pub fn resolve_seeds(&mut self, flag: Option<u64>) {
        resolve_seed_field(&mut self.seed, flag);
    }
}

/// One complex evaluation point; `im` defaults to zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

fn default_sb_level() -> usize {
    16
}

/// `sb`: evaluation table of the holomorphic transform.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SbConfig {
    pub function: FunctionSpec,
    /// Quadrature level of the direct route (the run also reports the
    /// level + 4 disagreement estimate).
    #[serde(default = "default_sb_level")]
    pub level: usize,
    pub points: Vec<PointSpec>,
}

/// Where reconstruction profiles come from: a known series profiled by an
/// engine, or previously emitted profile CSVs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceSpec {
    Truth {
        function: FunctionSpec,
        engine: EngineSpec,
    },
    Profiles {
        files: Vec<String>,
    },
}

/// `invert`: series recovery from profiles.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvertConfig {
    pub max_degree: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub source: SourceSpec,
    #[serde(default = "default_design")]
    pub design: DesignSpec,
}

impl InvertConfig {
    pub fn resolve_seeds(&mut self, flag: Option<u64>) {
        resolve_seed_field(&mut self.seed, flag);
        if let SourceSpec::Truth { engine, .. } = &mut self.source {
            engine.resolve_seeds(flag);
        }
    }
}

fn default_path_count() -> usize {
    8
}

/// `demo-wiener`: paths of the truncated Brownian model and a profile of
/// one of its functionals.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WienerConfig {
    /// Karhunen-Loeve modes.
    pub modes: usize,
    #[serde(default = "default_path_count")]
    pub path_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Registry functional: "endpoint" or "integral_sq".
    pub functional: String,
    /// 1-based index of the conditioned coordinate.
    pub direction: usize,
    pub offsets: OffsetSpec,
    pub engine: EngineSpec,
}

impl WienerConfig {
    pub fn resolve_seeds(&mut self, flag: Option<u64>) {
        resolve_seed_field(&mut self.seed, flag);
        self.engine.resolve_seeds(flag);
    }
}
