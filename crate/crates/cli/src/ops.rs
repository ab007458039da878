//! Subcommand implementations: load a config, resolve it into library
//! objects, run the operation, write the artifacts.
//!
//! Everything before the computation starts fails with exit code 2
//! (schema); everything after fails with exit code 1 (stage). Output
//! files are written in a fixed order and every write is announced on
//! stdout, so a run's terminal transcript is deterministic too.

use std::fs;
use std::path::{Path, PathBuf};

use gauss_radon::bargmann::{sb_forward, sb_quadrature, sb_quadrature_reliable, Complex};
use gauss_radon::disintegration::{cond_exp_check, disintegration_check};
use gauss_radon::hermite::Integrand;
use gauss_radon::inversion::{reconstruct, ProfileSource};
use gauss_radon::radon::{radon_profile, Engine, RadonProfile};
use gauss_radon::wiener::KLModel;
use gauss_radon::{mix_seed, Error};

use crate::config::{
    self, CondexpConfig, DisintegrateConfig, EngineSpec, InvertConfig, RadonConfig, SbConfig,
    SourceSpec, WienerConfig,
};
use crate::{CliError, CommonArgs};

fn stage(e: Error) -> CliError {
    // the one error a config cannot rule out ahead of time gets its
    // remediation spelled out
    if matches!(e, Error::EngineUnavailable { .. }) {
        return CliError::Stage(format!("{e}; hint: switch the engine to kind = \"mc\""));
    }
    CliError::Stage(e.to_string())
}

/// Writes one artifact and announces it.
fn write_out(dir: &Path, name: &str, content: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Stage(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, content)
        .map_err(|e| CliError::Stage(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(path)
}

/// The engine for direction index `j`: Monte Carlo runs draw from one
/// substream per direction so profiles never share noise.
fn direction_engine(spec: &EngineSpec, j: usize) -> Result<Engine, CliError> {
    let engine = spec.to_engine()?;
    Ok(match engine {
        Engine::MonteCarlo { samples, seed } => Engine::MonteCarlo {
            samples,
            seed: mix_seed(seed, j as u64),
        },
        other => other,
    })
}

pub fn cmd_radon(common: &CommonArgs) -> Result<(), CliError> {
    let mut cfg: RadonConfig = config::load(&common.config)?;
    cfg.resolve_seeds(common.seed);
    let dir = config::base_dir(&common.config);
    let f = cfg.function.resolve(&dir)?;
    let offsets = cfg.offsets.build()?;
    if cfg.directions.is_empty() {
        return Err(CliError::Config("at least one direction is needed".into()));
    }
    for d in &cfg.directions {
        if d.u.len() != cfg.function.dim {
            return Err(CliError::Config(format!(
                "direction {:?} does not have dimension {}",
                d.u, cfg.function.dim
            )));
        }
    }
    let head = config::header("radon", &cfg);
    for (j, d) in cfg.directions.iter().enumerate() {
        let engine = direction_engine(&cfg.engine, j)?;
        let profile = radon_profile(&f, &d.u, &offsets, engine).map_err(stage)?;
        let body = profile.to_csv_string();
        write_out(
            &common.out_dir,
            &format!("profile_{j}.csv"),
            &format!("{head}{body}"),
        )?;
    }
    Ok(())
}

pub fn cmd_disintegrate(common: &CommonArgs) -> Result<(), CliError> {
    let mut cfg: DisintegrateConfig = config::load(&common.config)?;
    cfg.resolve_seeds(common.seed);
    let dir = config::base_dir(&common.config);
    let f = cfg.function.resolve(&dir)?;
    let inner = cfg.inner.to_engine()?;
    let outer = cfg.outer.to_engine()?;
    let report = disintegration_check(&f, &cfg.normals, inner, outer).map_err(stage)?;
    // stochastic engines widen the allowance by three standard errors
    let allowance = cfg.tolerance + 3.0 * report.combined_stderr();
    let verdict = if report.residual() <= allowance {
        "PASS"
    } else {
        "FAIL"
    };
    let mut body = report.to_text();
    body.push_str(&format!(
        "tolerance: {:e} (+ 3 stderr = {:e})\nverdict: {verdict}\n",
        cfg.tolerance, allowance
    ));
    let head = config::header("disintegrate", &cfg);
    write_out(
        &common.out_dir,
        "disintegration.txt",
        &format!("{head}{body}"),
    )?;
    Ok(())
}

pub fn cmd_condexp(common: &CommonArgs) -> Result<(), CliError> {
    let mut cfg: CondexpConfig = config::load(&common.config)?;
    cfg.resolve_seeds(common.seed);
    let dir = config::base_dir(&common.config);
    let f = cfg.function.resolve_series(&dir)?;
    let seed = cfg.seed.expect("seeds are resolved");
    let report = cond_exp_check(&f, &cfg.normals, cfg.samples, cfg.bins, seed).map_err(stage)?;
    let head = config::header("condexp", &cfg);
    write_out(
        &common.out_dir,
        "condexp.txt",
        &format!("{head}{}", report.to_text()),
    )?;
    // bin table: conditional cell centers, then empirical vs predicted
    let n = report.codim;
    let center_cols: Vec<String> = (1..=n).map(|k| format!("s{k}")).collect();
    let mut csv = format!(
        "{}{},count,empirical,stderr,predicted,low_count\n",
        head,
        center_cols.join(",")
    );
    for bin in &report.bins {
        let center: Vec<String> = bin.center.iter().map(|v| format!("{v}")).collect();
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            center.join(","),
            bin.count,
            bin.empirical,
            bin.stderr,
            bin.predicted,
            bin.low_count
        ));
    }
    write_out(&common.out_dir, "condexp_bins.csv", &csv)?;
    Ok(())
}

fn format_complex(v: Complex<f64>) -> String {
    format!("{}{:+}i", v.re, v.im)
}

pub fn cmd_sb(common: &CommonArgs) -> Result<(), CliError> {
    let cfg: SbConfig = config::load(&common.config)?;
    let dir = config::base_dir(&common.config);
    if cfg.level < 8 {
        return Err(CliError::Config(format!(
            "direct transform needs level >= 8, got {}",
            cfg.level
        )));
    }
    if cfg.points.is_empty() {
        return Err(CliError::Config(
            "at least one evaluation point is needed".into(),
        ));
    }
    let d = cfg.function.dim;
    let f = cfg.function.resolve(&dir)?;
    // the coefficient route exists exactly when the function is a series
    let forward = match &f {
        Integrand::Series(s) => Some(sb_forward(s)),
        _ => None,
    };
    let mut points: Vec<Vec<Complex<f64>>> = Vec::with_capacity(cfg.points.len());
    for p in &cfg.points {
        let im = p.im.clone().unwrap_or_else(|| vec![0.0; d]);
        if p.re.len() != d || im.len() != d {
            return Err(CliError::Config(format!(
                "evaluation point {:?} does not have dimension {d}",
                p.re
            )));
        }
        points.push(
            p.re.iter()
                .zip(&im)
                .map(|(&re, &im)| Complex::new(re, im))
                .collect(),
        );
    }
    let head = config::header("sb", &cfg);
    let mut csv =
        format!("{head}point,z,series_re,series_im,quad_re,quad_im,disagreement,reliable\n");
    for (i, z) in points.iter().enumerate() {
        let series_cells = match &forward {
            Some(g) => {
                let v = g.eval(z).map_err(stage)?;
                format!("{},{}", v.re, v.im)
            }
            None => ",".to_string(),
        };
        let (q, est) = sb_quadrature(&f, z, cfg.level).map_err(stage)?;
        let z_text: Vec<String> = z.iter().map(|&c| format_complex(c)).collect();
        csv.push_str(&format!(
            "{i},{},{series_cells},{},{},{est},{}\n",
            z_text.join(";"),
            q.re,
            q.im,
            sb_quadrature_reliable(z, cfg.level)
        ));
    }
    write_out(&common.out_dir, "sb_eval.csv", &csv)?;
    Ok(())
}

pub fn cmd_invert(common: &CommonArgs) -> Result<(), CliError> {
    let mut cfg: InvertConfig = config::load(&common.config)?;
    cfg.resolve_seeds(common.seed);
    let dir = config::base_dir(&common.config);
    let source = match &cfg.source {
        SourceSpec::Truth { function, engine } => ProfileSource::Truth {
            f: function.resolve_series(&dir)?,
            engine: engine.to_engine()?,
        },
        SourceSpec::Profiles { files } => {
            if files.is_empty() {
                return Err(CliError::Config(
                    "at least one profile file is needed".into(),
                ));
            }
            let mut profiles = Vec::with_capacity(files.len());
            for name in files {
                let body = config::read_raw(&dir, name)?;
                let profile = RadonProfile::from_csv_str(&body)
                    .map_err(|e| CliError::Config(format!("{name}: {e}")))?;
                profiles.push(profile);
            }
            ProfileSource::Profiles(profiles)
        }
    };
    let strategy = cfg.design.to_strategy();
    let seed = cfg.seed.expect("seeds are resolved");
    let report = reconstruct(&source, cfg.max_degree, &strategy, seed).map_err(stage)?;
    let head = config::header("invert", &cfg);
    write_out(
        &common.out_dir,
        "reconstruction.txt",
        &format!("{head}{}", report.to_text()),
    )?;
    write_out(
        &common.out_dir,
        "recovered_series.json",
        &format!("{head}{}\n", report.recovered.to_json_string()),
    )?;
    Ok(())
}

pub fn cmd_demo_wiener(common: &CommonArgs) -> Result<(), CliError> {
    let mut cfg: WienerConfig = config::load(&common.config)?;
    cfg.resolve_seeds(common.seed);
    let model = KLModel::<f64>::new(cfg.modes).map_err(|e| CliError::Config(e.to_string()))?;
    if !gauss_radon::wiener::FUNCTIONALS.contains(&cfg.functional.as_str()) {
        return Err(CliError::Config(format!(
            "unknown functional {:?}; known: {}",
            cfg.functional,
            gauss_radon::wiener::FUNCTIONALS.join(", ")
        )));
    }
    if cfg.direction == 0 || cfg.direction > cfg.modes {
        return Err(CliError::Config(format!(
            "direction index {} outside 1..={}",
            cfg.direction, cfg.modes
        )));
    }
    let offsets = cfg.offsets.build()?;
    let engine = cfg.engine.to_engine()?;
    let seed = cfg.seed.expect("seeds are resolved");
    let head = config::header("demo-wiener", &cfg);

    let paths = model.sample_paths(seed, cfg.path_count);
    write_out(
        &common.out_dir,
        "paths.csv",
        &format!("{head}{}", model.paths_to_csv_string(&paths)),
    )?;
    let profile = model
        .functional_radon(&cfg.functional, cfg.direction, &offsets, engine)
        .map_err(stage)?;
    write_out(
        &common.out_dir,
        &format!("profile_{}.csv", cfg.functional),
        &format!("{head}{}", profile.to_csv_string()),
    )?;
    Ok(())
}
