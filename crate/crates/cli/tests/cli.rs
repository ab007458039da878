//! End-to-end behavior of every subcommand: worked numerical examples,
//! artifact round trips, exit codes, and the embedded config headers.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gauss_radon::radon::RadonProfile;

fn gauss_radon_cmd(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gauss-radon"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

#[test]
fn constant_function_profiles_are_constant_one() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(
        tmp.path(),
        "run.toml",
        r#"
[function]
dim = 3
registry = "one"

[[directions]]
u = [1.0, 0.0, 0.0]
[[directions]]
u = [1.0, 1.0, 0.0]
[[directions]]
u = [1.0, 1.0, 1.0]

[offsets]
kind = "uniform"
min = -1.0
max = 1.0
count = 5

[engine]
kind = "quadrature"
level = 4
"#,
    );
    let out = gauss_radon_cmd(&["radon", "--config", "run.toml"], tmp.path());
    assert!(out.status.success());
    for j in 0..3 {
        let text = fs::read_to_string(tmp.path().join(format!("profile_{j}.csv"))).unwrap();
        let profile = RadonProfile::<f64>::from_csv_str(&text).unwrap();
        assert_eq!(profile.values().len(), 5);
        assert!(profile.values().iter().all(|&v| (v - 1.0).abs() < 1e-14));
    }
}

#[test]
fn product_profile_along_the_diagonal_matches_the_parabola() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(
        tmp.path(),
        "run.toml",
        r#"
[function]
dim = 2
[[function.terms]]
exponents = [1, 1]
coeff = 1.0

[[directions]]
u = [1.0, 1.0]

[offsets]
kind = "explicit"
values = [-2.0, -1.0, 0.0, 1.0, 2.0]

[engine]
kind = "exact"
"#,
    );
    let out = gauss_radon_cmd(&["radon", "--config", "run.toml"], tmp.path());
    assert!(out.status.success());
    let text = fs::read_to_string(tmp.path().join("profile_0.csv")).unwrap();
    // the embedded header names the run and carries the resolved config
    assert!(text.starts_with("# gauss-radon radon\n# config:\n"));
    let profile = RadonProfile::<f64>::from_csv_str(&text).unwrap();
    for (&t, &v) in profile.offsets().iter().zip(profile.values()) {
        assert!((v - (t * t - 1.0) / 2.0).abs() < 1e-12, "t = {t}");
    }
}

#[test]
fn malformed_function_spec_exits_with_schema_code() {
    let tmp = tempfile::tempdir().unwrap();
    // registry and terms at once: rejected before any computation
    write_config(
        tmp.path(),
        "run.toml",
        r#"
[function]
dim = 2
registry = "one"
[[function.terms]]
exponents = [1, 1]
coeff = 1.0

[[directions]]
u = [1.0, 0.0]

[offsets]
kind = "uniform"
min = -1.0
max = 1.0
count = 3

[engine]
kind = "exact"
"#,
    );
    let out = gauss_radon_cmd(&["radon", "--config", "run.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exactly one"));
    // unknown registry name is a schema error too
    write_config(
        tmp.path(),
        "bad_name.toml",
        r#"
[function]
dim = 2
registry = "does_not_exist"

[[directions]]
u = [1.0, 0.0]

[offsets]
kind = "uniform"
min = -1.0
max = 1.0
count = 3

[engine]
kind = "exact"
"#,
    );
    let out = gauss_radon_cmd(&["radon", "--config", "bad_name.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn disintegration_report_carries_a_verdict() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(
        tmp.path(),
        "run.toml",
        r#"
normals = [[1.0, 0.0, 0.0]]

[function]
dim = 3
registry = "norm_sq"

[inner]
kind = "quadrature"
level = 6

[outer]
kind = "quadrature"
level = 6
"#,
    );
    let out = gauss_radon_cmd(&["disintegrate", "--config", "run.toml"], tmp.path());
    assert!(out.status.success());
    let text = fs::read_to_string(tmp.path().join("disintegration.txt")).unwrap();
    assert!(text.contains("lhs = 3.000000000000"));
    assert!(text.contains("verdict: PASS"));
}

#[test]
fn unavailable_engine_fails_the_stage_with_a_hint() {
    let tmp = tempfile::tempdir().unwrap();
    // nine free dimensions exceed what the tensor grid accepts, and a
    // point function leaves no exact fallback
    write_config(
        tmp.path(),
        "run.toml",
        r#"
normals = [[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]]

[function]
dim = 10
registry = "norm_sq"

[inner]
kind = "quadrature"
level = 4

[outer]
kind = "quadrature"
level = 4
"#,
    );
    let out = gauss_radon_cmd(&["disintegrate", "--config", "run.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("hint"), "stderr: {err}");
    assert!(err.contains("mc"), "stderr: {err}");
}

#[test]
fn condexp_emits_report_and_bin_table() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(
        tmp.path(),
        "run.toml",
        r#"
normals = [[1.0, 0.0]]
samples = 30000
bins = 10
seed = 5

[function]
dim = 2
[[function.terms]]
exponents = [2, 0]
coeff = 1.0
"#,
    );
    let out = gauss_radon_cmd(&["condexp", "--config", "run.toml"], tmp.path());
    assert!(out.status.success());
    let report = fs::read_to_string(tmp.path().join("condexp.txt")).unwrap();
    assert!(report.contains("max_bin_zscore"));
    let bins = fs::read_to_string(tmp.path().join("condexp_bins.csv")).unwrap();
    let rows: Vec<&str> = bins.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "s1,count,empirical,stderr,predicted,low_count");
    assert_eq!(rows.len(), 11);
    // a registry-only function cannot be conditioned in closed form
    write_config(
        tmp.path(),
        "point.toml",
        r#"
normals = [[1.0, 0.0]]
samples = 1000
bins = 4

[function]
dim = 2
registry = "indicator_ball:1.0"
"#,
    );
    let out = gauss_radon_cmd(&["condexp", "--config", "point.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sb_table_matches_the_coefficient_route() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(
        tmp.path(),
        "run.toml",
        r#"
level = 16

[function]
dim = 1
[[function.terms]]
exponents = [2]
coeff = 1.0

[[points]]
re = [1.0]
[[points]]
re = [1.0]
im = [1.0]
"#,
    );
    let out = gauss_radon_cmd(&["sb", "--config", "run.toml"], tmp.path());
    assert!(out.status.success());
    let text = fs::read_to_string(tmp.path().join("sb_eval.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    // the second Hermite polynomial maps to z^2: 1 at z=1, 2i at z=1+i
    let row0: Vec<f64> = rows[0][2..7].iter().map(|c| c.parse().unwrap()).collect();
    assert!((row0[0] - 1.0).abs() < 1e-12 && row0[1].abs() < 1e-12);
    assert!((row0[2] - 1.0).abs() < 1e-8 && row0[3].abs() < 1e-8);
    let row1: Vec<f64> = rows[1][2..7].iter().map(|c| c.parse().unwrap()).collect();
    assert!(row1[0].abs() < 1e-12 && (row1[1] - 2.0).abs() < 1e-12);
    assert!(row1[2].abs() < 1e-8 && (row1[3] - 2.0).abs() < 1e-8);
    assert_eq!(rows[0][7], "true");
}

#[test]
fn emitted_profiles_feed_the_inversion() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(
        tmp.path(),
        "profiles.toml",
        r#"
[function]
dim = 2
[[function.terms]]
exponents = [1, 1]
coeff = 1.0

[[directions]]
u = [1.0, 0.0]
[[directions]]
u = [1.0, 1.0]
[[directions]]
u = [0.0, 1.0]

[offsets]
kind = "gauss_hermite"
level = 4

[engine]
kind = "exact"
"#,
    );
    let out = gauss_radon_cmd(&["radon", "--config", "profiles.toml"], tmp.path());
    assert!(out.status.success());
    write_config(
        tmp.path(),
        "invert.toml",
        r#"
max_degree = 2

[source]
kind = "profiles"
files = ["profile_0.csv", "profile_1.csv", "profile_2.csv"]
"#,
    );
    let out = gauss_radon_cmd(
        &["invert", "--config", "invert.toml", "--out-dir", "inv"],
        tmp.path(),
    );
    assert!(out.status.success());
    // the recovered series is JSON behind the comment header
    let text = fs::read_to_string(tmp.path().join("inv/recovered_series.json")).unwrap();
    let body: String = text
        .lines()
        .skip_while(|l| l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n");
    let series = gauss_radon::hermite::HermiteSeries::<f64>::from_json_str(&body).unwrap();
    let product = gauss_radon::multi_index::MultiIndex::new(vec![1, 1]);
    assert!((series.coeff(&product) - 1.0).abs() < 1e-10);
    let report = fs::read_to_string(tmp.path().join("inv/reconstruction.txt")).unwrap();
    assert!(report.contains("inconsistent=false"));
    // a recovered series is itself a valid function input
    write_config(
        tmp.path(),
        "again.toml",
        r#"
[function]
dim = 2
series_json = "inv/recovered_series.json"

[[directions]]
u = [1.0, 1.0]

[offsets]
kind = "explicit"
values = [0.0]

[engine]
kind = "exact"
"#,
    );
    let out = gauss_radon_cmd(
        &["radon", "--config", "again.toml", "--out-dir", "again"],
        tmp.path(),
    );
    assert!(out.status.success());
    let text = fs::read_to_string(tmp.path().join("again/profile_0.csv")).unwrap();
    let profile = RadonProfile::<f64>::from_csv_str(&text).unwrap();
    assert!((profile.values()[0] - (-0.5)).abs() < 1e-9);
}

#[test]
fn wiener_demo_emits_paths_and_a_linear_profile() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(
        tmp.path(),
        "run.toml",
        r#"
modes = 30
path_count = 3
seed = 9
functional = "endpoint"
direction = 1

[offsets]
kind = "uniform"
min = -2.0
max = 2.0
count = 9

[engine]
kind = "exact"
"#,
    );
    let out = gauss_radon_cmd(&["demo-wiener", "--config", "run.toml"], tmp.path());
    assert!(out.status.success());
    let paths = fs::read_to_string(tmp.path().join("paths.csv")).unwrap();
    let rows: Vec<&str> = paths.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "t,path_1,path_2,path_3");
    assert_eq!(rows.len(), 513);
    let text = fs::read_to_string(tmp.path().join("profile_endpoint.csv")).unwrap();
    let profile = RadonProfile::<f64>::from_csv_str(&text).unwrap();
    let slope = std::f64::consts::SQRT_2 / (std::f64::consts::PI / 2.0);
    for (&t, &v) in profile.offsets().iter().zip(profile.values()) {
        assert!((v - slope * t).abs() < 1e-12);
    }
    // unknown functionals and out-of-range directions are schema errors
    write_config(
        tmp.path(),
        "bad.toml",
        &fs::read_to_string(tmp.path().join("run.toml"))
            .unwrap()
            .replace("\"endpoint\"", "\"area\""),
    );
    let out = gauss_radon_cmd(&["demo-wiener", "--config", "bad.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    write_config(
        tmp.path(),
        "bad_k.toml",
        &fs::read_to_string(tmp.path().join("run.toml"))
            .unwrap()
            .replace("direction = 1", "direction = 31"),
    );
    let out = gauss_radon_cmd(&["demo-wiener", "--config", "bad_k.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_flag_overrides_every_configured_seed() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(
        tmp.path(),
        "run.toml",
        r#"
[function]
dim = 2
registry = "norm_sq"

[[directions]]
u = [1.0, 0.0]

[offsets]
kind = "explicit"
values = [0.0, 1.0]

[engine]
kind = "mc"
samples = 500
seed = 7
"#,
    );
    let run = |out_dir: &str, extra: &[&str]| {
        let mut args = vec!["radon", "--config", "run.toml", "--out-dir", out_dir];
        args.extend_from_slice(extra);
        let out = gauss_radon_cmd(&args, tmp.path());
        assert!(out.status.success());
        fs::read_to_string(tmp.path().join(out_dir).join("profile_0.csv")).unwrap()
    };
    let base = run("a", &[]);
    let overridden = run("b", &["--seed", "8"]);
    let same_as_config = run("c", &["--seed", "7"]);
    assert_ne!(base, overridden);
    // the override lands in the header, so the artifact stays honest
    assert!(overridden.contains("seed = 8"));
    assert_eq!(
        base.lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>(),
        same_as_config
            .lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
    );
}
