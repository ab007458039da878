//! Truncated Karhunen-Loeve model of classical Wiener space: Brownian
//! paths on `[0, 1]` built from `m` sine modes with independent standard
//! Gaussian coordinates, so that every construct of this crate (flats,
//! transforms, disintegration) applies verbatim to path functionals
//! through the coordinate space `R^m`.
//!
//! The basis is `e_k(t) = sqrt(2) sin((k - 1/2) pi t) / ((k - 1/2) pi)`,
//! orthonormal in the Cameron-Martin inner product (integral of the
//! product of derivatives); conditioning a path functional on the `k`-th
//! coordinate is exactly a hyperplane flat in the coordinate model.
//! Truncation shows up as a variance deficit of order `1/m` at the
//! endpoint, which the tests track against the partial-sum tail.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hermite::HermiteSeries;
use crate::linalg::Matrix;
use crate::multi_index::MultiIndex;
use crate::quadrature::gauss_legendre_f64;
use crate::radon::{radon_profile, Engine, RadonProfile};
use crate::real::{substream_rng, Real};

/// Default number of rendering points on `[0, 1]`.
const DEFAULT_GRID: usize = 512;

/// Names accepted by the functional registry.
pub const FUNCTIONALS: [&str; 2] = ["endpoint", "integral_sq"];

/// Truncated Karhunen-Loeve model: `m` modes and a rendering time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KLModel<T: Real> {
    m: usize,
    time_grid: Vec<T>,
}

impl<T: Real> KLModel<T> {
    /// Model with `m` modes on the default uniform grid.
    pub fn new(m: usize) -> Result<Self> {
        let grid = (0..DEFAULT_GRID)
            .map(|i| T::cast(i as f64 / (DEFAULT_GRID - 1) as f64))
            .collect();
        Self::with_time_grid(m, grid)
    }

    /// Model with a caller-chosen grid, which must increase strictly from
    /// 0 to 1 (the integral functionals integrate over exactly `[0, 1]`).
    pub fn with_time_grid(m: usize, time_grid: Vec<T>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter {
                detail: "the model needs at least one mode".into(),
            });
        }
        if time_grid.len() < 2
            || time_grid[0] != T::zero()
            || *time_grid.last().unwrap() != T::one()
            || time_grid.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidParameter {
                detail: "time grid must increase strictly from 0 to 1".into(),
            });
        }
        Ok(Self { m, time_grid })
    }

    pub fn modes(&self) -> usize {
        self.m
    }

    /// Dimension of the coordinate model (same as the mode count).
    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn time_grid(&self) -> &[T] {
        &self.time_grid
    }

    /// `e_k(t)`, `k` counted from 1.
    pub fn basis_value(&self, k: usize, t: T) -> T {
        let freq = (k as f64 - 0.5) * std::f64::consts::PI;
        let tf = t.to_f64().unwrap();
        T::cast(std::f64::consts::SQRT_2 * (freq * tf).sin() / freq)
    }

    /// `e_k'(t)`, the Cameron-Martin representative's derivative.
    pub fn basis_derivative(&self, k: usize, t: f64) -> f64 {
        let freq = (k as f64 - 0.5) * std::f64::consts::PI;
        std::f64::consts::SQRT_2 * (freq * t).cos()
    }

    fn check_coords(&self, z: &[T]) -> Result<()> {
        if z.len() != self.m {
            return Err(Error::DimensionMismatch {
                context: "path coordinates",
                expected: self.m,
                found: z.len(),
            });
        }
        Ok(())
    }

    /// `path(t) = sum_k z_k e_k(t)` for one time.
    pub fn path_value(&self, z: &[T], t: T) -> Result<T> {
        self.check_coords(z)?;
        Ok(z.iter()
            .enumerate()
            .map(|(i, &zk)| zk * self.basis_value(i + 1, t))
            .sum())
    }

    /// The whole path on the time grid.
    pub fn render_path(&self, z: &[T]) -> Result<Vec<T>> {
        self.check_coords(z)?;
        Ok(self
            .time_grid
            .iter()
            .map(|&t| {
                z.iter()
                    .enumerate()
                    .map(|(i, &zk)| zk * self.basis_value(i + 1, t))
                    .sum()
            })
            .collect())
    }

    /// Coordinate vectors of `count` independent paths, one substream per
    /// path.
    pub fn sample_coordinates(&self, seed: u64, count: usize) -> Vec<Vec<T>> {
        (0..count)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream_rng(seed, i as u64);
                (0..self.m).map(|_| T::standard_normal(&mut rng)).collect()
            })
            .collect()
    }

    /// `count` rendered paths (rows) on the time grid.
    pub fn sample_paths(&self, seed: u64, count: usize) -> Vec<Vec<T>> {
        self.sample_coordinates(seed, count)
            .into_par_iter()
            .map(|z| self.render_path(&z).expect("coordinates have length m"))
            .collect()
    }

    /// The endpoint functional `path(1)` as a coordinate series (linear).
    pub fn endpoint_series(&self) -> HermiteSeries<T> {
        let terms = (0..self.m).map(|i| {
            (
                MultiIndex::unit(self.m, i),
                self.basis_value(i + 1, T::one()),
            )
        });
        HermiteSeries::from_terms(self.m, terms).expect("degree-one terms")
    }

    /// Trapezoid weights of the time grid.
    fn trapezoid_weights(&self) -> Vec<f64> {
        let g = &self.time_grid;
        let n = g.len();
        let mut w = vec![0.0f64; n];
        for i in 0..n - 1 {
            let h = (g[i + 1] - g[i]).to_f64().unwrap();
            w[i] += 0.5 * h;
            w[i + 1] += 0.5 * h;
        }
        w
    }

    /// The functional `integral of path(t)^2 dt` as a coordinate series:
    /// the quadratic form with matrix `A[j][l] = integral of e_j e_l`,
    /// computed by trapezoid quadrature on the time grid (so the series is
    /// exactly the grid functional, discretization and all).
    pub fn integral_sq_series(&self) -> Result<HermiteSeries<T>> {
        let weights = self.trapezoid_weights();
        // basis values on the grid, one row per mode
        let basis: Vec<Vec<f64>> = (1..=self.m)
            .map(|k| {
                self.time_grid
                    .iter()
                    .map(|&t| self.basis_value(k, t).to_f64().unwrap())
                    .collect()
            })
            .collect();
        let mut a: Matrix<T> = vec![vec![T::zero(); self.m]; self.m];
        for j in 0..self.m {
            for l in j..self.m {
                let v: f64 = weights
                    .iter()
                    .zip(&basis[j])
                    .zip(&basis[l])
                    .map(|((&w, &bj), &bl)| w * bj * bl)
                    .sum();
                a[j][l] = T::cast(v);
                a[l][j] = T::cast(v);
            }
        }
        HermiteSeries::from_quadratic_form(&a, &vec![T::zero(); self.m], T::zero())
    }

    /// Registry dispatch for the two supported path functionals.
    pub fn functional_series(&self, name: &str) -> Result<HermiteSeries<T>> {
        match name {
            "endpoint" => Ok(self.endpoint_series()),
            "integral_sq" => self.integral_sq_series(),
            other => Err(Error::UnknownFunction {
                name: other.to_string(),
            }),
        }
    }

    /// Profile of a registry functional conditioned on the `k`-th
    /// coordinate (1-based): the transform along direction `e_k` of the
    /// coordinate model.
    pub fn functional_radon(
        &self,
        name: &str,
        k: usize,
        offsets: &[T],
        engine: Engine,
    ) -> Result<RadonProfile<T>> {
        if k == 0 || k > self.m {
            return Err(Error::InvalidParameter {
                detail: format!("direction index {k} outside 1..={}", self.m),
            });
        }
        let f = self.functional_series(name)?;
        let mut u = vec![T::zero(); self.m];
        u[k - 1] = T::one();
        radon_profile(&f.into(), &u, offsets, engine)
    }

    /// Partial sum `sum_k e_k(1)^2`, the model's endpoint variance; tends
    /// to 1 with an `O(1/m)` tail.
    pub fn endpoint_variance_partial(&self) -> T {
        (1..=self.m)
            .map(|k| {
                let v = self.basis_value(k, T::one());
                v * v
            })
            .sum()
    }

    /// Partial sum `sum_k e_k(s) e_k(t)`, the model's path covariance;
    /// tends to `min(s, t)`.
    pub fn covariance_partial(&self, s: T, t: T) -> T {
        (1..=self.m)
            .map(|k| self.basis_value(k, s) * self.basis_value(k, t))
            .sum()
    }

    /// Cameron-Martin inner product `integral of e_j' e_k'` by composite
    /// Gauss-Legendre with subinterval count scaled to the oscillation, so
    /// the result is exact to rounding. Equals `delta_jk` for the true
    /// basis; the defect measures implementation error only.
    pub fn cm_gram_entry(&self, j: usize, k: usize) -> f64 {
        let (nodes, weights) = gauss_legendre_f64(5);
        let pieces = 6 * j.max(k).max(1);
        let h = 1.0 / pieces as f64;
        let mut acc = 0.0f64;
        for p in 0..pieces {
            let mid = (p as f64 + 0.5) * h;
            for (&x, &w) in nodes.iter().zip(&weights) {
                let t = mid + 0.5 * h * x;
                acc += 0.5 * h * w * self.basis_derivative(j, t) * self.basis_derivative(k, t);
            }
        }
        acc
    }

    /// Largest deviation of the Cameron-Martin gram from the identity over
    /// modes `1..=upto`.
    pub fn cm_gram_defect(&self, upto: usize) -> f64 {
        let upto = upto.min(self.m);
        let mut worst = 0.0f64;
        for j in 1..=upto {
            for k in j..=upto {
                let want = f64::from(u8::from(j == k));
                worst = worst.max((self.cm_gram_entry(j, k) - want).abs());
            }
        }
        worst
    }

    /// CSV rendering of paths: a metadata comment, a header, then one row
    /// per grid time with one column per path.
    pub fn paths_to_csv_string(&self, paths: &[Vec<T>]) -> String {
        let mut out = format!(
            "# kl paths: m={} grid={} count={}\n",
            self.m,
            self.time_grid.len(),
            paths.len()
        );
        let header: Vec<String> = (1..=paths.len()).map(|i| format!("path_{i}")).collect();
        out.push_str(&format!("t,{}\n", header.join(",")));
        for (i, &t) in self.time_grid.iter().enumerate() {
            let row: Vec<String> = paths.iter().map(|p| format!("{}", p[i])).collect();
            out.push_str(&format!("{t},{}\n", row.join(",")));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disintegration::{disintegration_check, OuterEngine};
    use crate::inversion::profile_to_coeffs;
    use crate::radon::gh_offset_grid;

    #[test]
    fn paths_start_at_zero_exactly() {
        let model = KLModel::<f64>::new(20).unwrap();
        let paths = model.sample_paths(3, 4);
        for p in &paths {
            assert_eq!(p[0], 0.0);
            assert_eq!(p.len(), 512);
        }
    }

    #[test]
    fn endpoint_variance_approaches_one() {
        let model = KLModel::<f64>::new(200).unwrap();
        let partial = model.endpoint_variance_partial();
        // truncation tail stays under 1/m
        assert!(
            partial < 1.0 && 1.0 - partial < 1.0 / 200.0,
            "partial {partial}"
        );
        // sampled endpoint variance agrees with the partial sum within 3
        // standard errors of a variance estimate
        let n = 100_000usize;
        let coords = model.sample_coordinates(123, n);
        let e1: Vec<f64> = (1..=200).map(|k| model.basis_value(k, 1.0)).collect();
        let endpoints: Vec<f64> = coords
            .iter()
            .map(|z| z.iter().zip(&e1).map(|(a, b)| a * b).sum())
            .collect();
        let mean = endpoints.iter().sum::<f64>() / n as f64;
        let var = endpoints
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / (n - 1) as f64;
        // stderr of the sample variance of a Gaussian: var * sqrt(2/(n-1))
        let se = partial * (2.0 / (n as f64 - 1.0)).sqrt();
        assert!(
            (var - partial).abs() <= 3.0 * se,
            "var {var} partial {partial}"
        );
        assert!((var - 1.0).abs() <= 3.0 * se + 1.0 / 200.0);
    }

    #[test]
    fn covariance_approaches_the_brownian_kernel() {
        let model = KLModel::<f64>::new(200).unwrap();
        let (s, t) = (0.3f64, 0.7);
        let partial = model.covariance_partial(s, t);
        assert!(
            (partial - s.min(t)).abs() < 1.0 / 200.0,
            "partial {partial}"
        );
        let n = 100_000usize;
        let coords = model.sample_coordinates(99, n);
        let es: Vec<f64> = (1..=200).map(|k| model.basis_value(k, s)).collect();
        let et: Vec<f64> = (1..=200).map(|k| model.basis_value(k, t)).collect();
        let mut prods = Vec::with_capacity(n);
        for z in &coords {
            let xs: f64 = z.iter().zip(&es).map(|(a, b)| a * b).sum();
            let xt: f64 = z.iter().zip(&et).map(|(a, b)| a * b).sum();
            prods.push(xs * xt);
        }
        let mean = prods.iter().sum::<f64>() / n as f64;
        let var = prods.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!(
            (mean - partial).abs() <= 3.0 * se,
            "cov {mean} partial {partial}"
        );
        assert!((mean - s.min(t)).abs() <= 3.0 * se + 1.0 / 200.0);
    }

    #[test]
    fn rendered_paths_carry_standard_normal_coordinates() {
        // recover coordinates from rendered paths through the L2 pairing
        // z_k = (k - 1/2)^2 pi^2 * integral of path * e_k, then check the
        // first and second moments
        let m = 5usize;
        let model = KLModel::<f64>::new(m).unwrap();
        let n = 20_000usize;
        let paths = model.sample_paths(7, n);
        let weights = model.trapezoid_weights();
        let grid: Vec<f64> = model.time_grid().to_vec();
        let mut recovered: Vec<Vec<f64>> = Vec::with_capacity(n);
        for p in &paths {
            let z: Vec<f64> = (1..=m)
                .map(|k| {
                    let freq = (k as f64 - 0.5) * std::f64::consts::PI;
                    let pair: f64 = grid
                        .iter()
                        .zip(p)
                        .zip(&weights)
                        .map(|((&t, &x), &w)| w * x * model.basis_value(k, t))
                        .sum();
                    freq * freq * pair
                })
                .collect();
            recovered.push(z);
        }
        for k in 0..m {
            let mean = recovered.iter().map(|z| z[k]).sum::<f64>() / n as f64;
            let var = recovered.iter().map(|z| (z[k] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se_mean = (1.0f64 / n as f64).sqrt();
            let se_var = (2.0f64 / n as f64).sqrt();
            // 4 standard errors plus room for the grid-quadrature bias
            assert!(mean.abs() < 4.0 * se_mean + 1e-3, "mode {k} mean {mean}");
            assert!(
                (var - 1.0).abs() < 4.0 * se_var + 1e-2,
                "mode {k} var {var}"
            );
        }
        // distinct modes decorrelated
        let c01 = recovered.iter().map(|z| z[0] * z[1]).sum::<f64>() / n as f64;
        assert!(
            c01.abs() < 4.0 * (1.0f64 / n as f64).sqrt() + 1e-3,
            "corr {c01}"
        );
    }

    #[test]
    fn cameron_martin_gram_is_the_identity() {
        let model = KLModel::<f64>::new(200).unwrap();
        assert!(
            model.cm_gram_defect(40) < 1e-10,
            "defect {}",
            model.cm_gram_defect(40)
        );
        // spot checks high in the mode range
        for (j, k) in [(200, 200), (1, 200), (137, 53)] {
            let want = f64::from(u8::from(j == k));
            assert!(
                (model.cm_gram_entry(j, k) - want).abs() < 1e-10,
                "entry ({j},{k})"
            );
        }
    }

    #[test]
    fn endpoint_profile_is_linear_in_the_offset() {
        let model = KLModel::<f64>::new(30).unwrap();
        let offsets = gh_offset_grid::<f64>(5);
        let profile = model
            .functional_radon("endpoint", 1, &offsets, Engine::Exact)
            .unwrap();
        let slope = model.basis_value(1, 1.0);
        for (&t, &v) in offsets.iter().zip(profile.values()) {
            assert!((v - slope * t).abs() < 1e-12, "t {t}");
        }
        // affine in the Hermite basis: only a_1 present
        let coeffs = profile_to_coeffs(&profile, 4).unwrap().coeffs;
        assert!((coeffs[1] - slope).abs() < 1e-12);
        for k in [0usize, 2, 3, 4] {
            assert!(coeffs[k].abs() < 1e-12, "a{k}");
        }
        // centered at zero offset
        let at_zero = model
            .functional_radon("endpoint", 1, &[0.0], Engine::Exact)
            .unwrap();
        assert!(at_zero.values()[0].abs() < 1e-14);
    }

    #[test]
    fn integral_sq_profile_is_quadratic_with_the_grid_constant() {
        let m = 12usize;
        let model = KLModel::<f64>::new(m).unwrap();
        let offsets = gh_offset_grid::<f64>(6);
        let profile = model
            .functional_radon("integral_sq", 1, &offsets, Engine::Exact)
            .unwrap();
        // independent trapezoid of the mode energies
        let grid: Vec<f64> = model.time_grid().to_vec();
        let mut mode_energy = vec![0.0f64; m];
        for k in 1..=m {
            let mut acc = 0.0;
            for i in 0..grid.len() - 1 {
                let (a, b) = (grid[i], grid[i + 1]);
                let (fa, fb) = (
                    model.basis_value(k, a).powi(2),
                    model.basis_value(k, b).powi(2),
                );
                acc += 0.5 * (b - a) * (fa + fb);
            }
            mode_energy[k - 1] = acc;
        }
        let constant: f64 = mode_energy[1..].iter().sum();
        // value at zero offset: every mode but the conditioned one at rest
        let at_zero = model
            .functional_radon("integral_sq", 1, &[0.0], Engine::Exact)
            .unwrap();
        assert!(
            (at_zero.values()[0] - constant).abs() < 1e-10,
            "{} vs {constant}",
            at_zero.values()[0]
        );
        // closed-form energies 1/((k-1/2)^2 pi^2) up to grid bias
        let closed: f64 = (2..=m)
            .map(|k| {
                let freq = (k as f64 - 0.5) * std::f64::consts::PI;
                1.0 / (freq * freq)
            })
            .sum();
        assert!((constant - closed).abs() < 5e-4, "{constant} vs {closed}");
        // quadratic in the Hermite basis: a_0, a_2 only
        let coeffs = profile_to_coeffs(&profile, 4).unwrap().coeffs;
        assert!(coeffs[0] > 0.0 && coeffs[2] > 0.0);
        for k in [1usize, 3, 4] {
            assert!(coeffs[k].abs() < 1e-10, "a{k} = {}", coeffs[k]);
        }
    }

    #[test]
    fn endpoint_squared_disintegrates_over_the_first_coordinate() {
        // lhs: model endpoint variance; rhs: outer integral over the first
        // coordinate of the flat-wise transform
        let m = 25usize;
        let model = KLModel::<f64>::new(m).unwrap();
        let e1: Vec<f64> = (1..=m).map(|k| model.basis_value(k, 1.0)).collect();
        let a: Matrix<f64> = (0..m)
            .map(|j| (0..m).map(|l| e1[j] * e1[l]).collect())
            .collect();
        let endpoint_sq = HermiteSeries::from_quadratic_form(&a, &vec![0.0; m], 0.0).unwrap();
        let mut normal = vec![0.0f64; m];
        normal[0] = 1.0;
        let report = disintegration_check(
            &endpoint_sq.into(),
            &[normal],
            Engine::Exact,
            OuterEngine::Quadrature { level: 3 },
        )
        .unwrap();
        assert!(
            (report.lhs - model.endpoint_variance_partial()).abs() < 1e-12,
            "lhs {}",
            report.lhs
        );
        assert!(report.residual() < 1e-10, "residual {}", report.residual());
    }

    #[test]
    fn functional_registry_rejects_unknowns() {
        let model = KLModel::<f64>::new(4).unwrap();
        assert!(matches!(
            model.functional_series("area"),
            Err(Error::UnknownFunction { .. })
        ));
        assert!(matches!(
            model.functional_radon("endpoint", 0, &[0.0], Engine::Exact),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            model.functional_radon("endpoint", 5, &[0.0], Engine::Exact),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(KLModel::<f64>::new(0).is_err());
    }

    #[test]
    fn csv_rendering_has_one_column_per_path() {
        let model = KLModel::with_time_grid(3, vec![0.0f64, 0.25, 0.5, 0.75, 1.0]).unwrap();
        let paths = model.sample_paths(4, 2);
        let text = model.paths_to_csv_string(&paths);
        let mut lines = text.lines();
        assert!(lines
            .next()
            .unwrap()
            .starts_with("# kl paths: m=3 grid=5 count=2"));
        assert_eq!(lines.next().unwrap(), "t,path_1,path_2");
        assert_eq!(lines.count(), 5);
        // sampling is reproducible
        assert_eq!(paths, model.sample_paths(4, 2));
    }
}
