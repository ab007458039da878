//! Affine subspaces of R^d and the Gaussian measures concentrated on them.
//!
//! A flat is `M_p = p + M_0` where `M_0` is the orthogonal complement of the
//! span of `n` stored orthonormal normals and the offset `p` lies in that
//! span. The associated measure has mean `p`, covariance the orthogonal
//! projector `P = I - N N^T`, characteristic functional
//! `E[e^{i<k,X>}] = exp(i<p,k> - ||P k||^2 / 2)`, and gives probability one
//! to `M_p` itself: sampling is the affine push-forward `x = p + P z` of a
//! standard normal `z`, so the constraints `N^T x = N^T p` hold to rounding.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::real::{substream_rng, Real};
use crate::tol;

/// Affine subspace of R^d stored by an orthonormal basis of its normal
/// directions (`codim` vectors) and an offset inside their span.
#[derive(Debug, Clone, PartialEq)]
pub struct Flat<T: Real> {
    dim: usize,
    normals: Vec<Vec<T>>,
    offset: Vec<T>,
    offset_residual: T,
}

impl<T: Real> Flat<T> {
    /// Orthonormalizes `normals`, projects `offset` onto their span, and
    /// builds the flat.
    ///
    /// Fails when the normals are rank deficient (parallel within
    /// [`tol::RANK_DEFICIENCY`]) or when the offset sticks out of their span
    /// by more than [`tol::OFFSET_RESIDUAL`]; the recorded residual of the
    /// accepted projection is kept for diagnostics.
    pub fn new(normals: &[Vec<T>], offset: &[T]) -> Result<Self> {
        let dim = offset.len();
        if dim == 0 {
            return Err(Error::InvalidParameter {
                detail: "ambient dimension must be positive".into(),
            });
        }
        for (i, v) in normals.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "flat normal",
                    expected: dim,
                    found: v.len(),
                });
            }
            if i >= dim {
                return Err(Error::DegenerateBasis {
                    detail: format!("more normals ({}) than dimensions ({dim})", normals.len()),
                });
            }
        }
        let basis = linalg::orthonormalize(normals)?;
        let projected = linalg::project_onto_span(&basis, offset);
        let residual = linalg::norm(&linalg::sub(offset, &projected));
        if residual.to_f64().unwrap() > tol::OFFSET_RESIDUAL {
            return Err(Error::InconsistentOffset {
                residual: residual.to_f64().unwrap(),
            });
        }
        Ok(Self {
            dim,
            normals: basis,
            offset: projected,
            offset_residual: residual,
        })
    }

    /// The whole space (no constraints, standard Gaussian measure).
    pub fn full_space(dim: usize) -> Self {
        Self {
            dim,
            normals: Vec::new(),
            offset: vec![T::zero(); dim],
            offset_residual: T::zero(),
        }
    }

    /// The hyperplane `t u + u_perp` for a direction `u` (normalized here)
    /// and signed offset `t`.
    pub fn hyperplane(u: &[T], t: T) -> Result<Self> {
        let n = linalg::norm(u);
        if n == T::zero() {
            return Err(Error::DegenerateBasis {
                detail: "hyperplane direction is the zero vector".into(),
            });
        }
        let unit = linalg::scale(u, T::one() / n);
        let offset = linalg::scale(&unit, t);
        Self::new(&[unit], &offset)
    }

    /// The single point `p` (full-codimension flat).
    pub fn point(p: &[T]) -> Result<Self> {
        let dim = p.len();
        let normals: Vec<Vec<T>> = (0..dim)
            .map(|axis| {
                let mut e = vec![T::zero(); dim];
                e[axis] = T::one();
                e
            })
            .collect();
        Self::new(&normals, p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of constraints (dimension of the normal space).
    pub fn codim(&self) -> usize {
        self.normals.len()
    }

    /// Orthonormal basis of the normal space.
    pub fn normals(&self) -> &[Vec<T>] {
        &self.normals
    }

    /// Offset `p`, always inside the span of the normals.
    pub fn offset(&self) -> &[T] {
        &self.offset
    }

    /// Distance between the supplied offset and its accepted projection.
    pub fn offset_residual(&self) -> T {
        self.offset_residual
    }

    /// Applies the covariance projector `P = I - N N^T` to a vector without
    /// materializing the matrix.
    pub fn project_tangent(&self, x: &[T]) -> Vec<T> {
        linalg::project_out_span(&self.normals, x)
    }
}

/// Gaussian measure with mean the flat's offset and covariance the projector
/// onto the flat's tangent space.
#[derive(Debug, Clone)]
pub struct SubspaceGaussian<T: Real> {
    flat: Flat<T>,
    covariance: Matrix<T>,
}

impl<T: Real> SubspaceGaussian<T> {
    pub fn new(flat: Flat<T>) -> Self {
        let d = flat.dim();
        let mut covariance = vec![vec![T::zero(); d]; d];
        for (i, row) in covariance.iter_mut().enumerate() {
            row[i] = T::one();
            for n in flat.normals() {
                let ni = n[i];
                for (j, cell) in row.iter_mut().enumerate() {
                    *cell -= ni * n[j];
                }
            }
        }
        Self { flat, covariance }
    }

    pub fn flat(&self) -> &Flat<T> {
        &self.flat
    }

    /// Mean vector (= the flat's offset).
    pub fn mean(&self) -> &[T] {
        self.flat.offset()
    }

    /// Covariance projector `I - N N^T` as a dense matrix.
    pub fn covariance(&self) -> &Matrix<T> {
        &self.covariance
    }

    /// `E[e^{i<k,X>}] = exp(i<p,k> - ||P k||^2 / 2)`.
    pub fn char_functional(&self, k: &[T]) -> Result<Complex<T>> {
        if k.len() != self.flat.dim() {
            return Err(Error::DimensionMismatch {
                context: "characteristic functional argument",
                expected: self.flat.dim(),
                found: k.len(),
            });
        }
        let phase = linalg::dot(self.flat.offset(), k);
        let pk = self.flat.project_tangent(k);
        let half = T::cast(0.5);
        let decay = half * linalg::dot(&pk, &pk);
        Ok(Complex::new(-decay, phase).exp())
    }

    /// Law of the linear functional `<h, X>`: mean `<p,h>` and variance
    /// `||P h||^2`. The variance vanishes exactly for `h` in the normal
    /// space, which is the degeneracy that makes the transform tomographic.
    pub fn pw_mean_var(&self, h: &[T]) -> Result<(T, T)> {
        if h.len() != self.flat.dim() {
            return Err(Error::DimensionMismatch {
                context: "linear functional direction",
                expected: self.flat.dim(),
                found: h.len(),
            });
        }
        let mean = linalg::dot(self.flat.offset(), h);
        let ph = self.flat.project_tangent(h);
        Ok((mean, linalg::dot(&ph, &ph)))
    }

    /// One draw using the supplied RNG: `x = p + (z - N (N^T z))`.
    pub fn sample_with<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        let d = self.flat.dim();
        let mut z = Vec::with_capacity(d);
        for _ in 0..d {
            z.push(T::standard_normal(rng));
        }
        let tangent = self.flat.project_tangent(&z);
        linalg::axpy(self.flat.offset(), T::one(), &tangent)
    }

    /// `count` deterministic draws; draw `i` comes from substream `i` of
    /// `seed`, so the result is independent of threading and of `count`
    /// prefixes: extending the count never changes earlier samples.
    pub fn samples(&self, seed: u64, count: usize) -> Vec<Vec<T>> {
        (0..count)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream_rng(seed, i as u64);
                self.sample_with(&mut rng)
            })
            .collect()
    }
}

/// Worst violation of the flat's linear constraints over a sample set:
/// `max_i ||N^T x_i - N^T p||_inf`.
pub fn concentration_defect<T: Real>(flat: &Flat<T>, samples: &[Vec<T>]) -> f64 {
    let mut worst = 0.0f64;
    for x in samples {
        for n in flat.normals() {
            let target = linalg::dot(n, flat.offset());
            let got = linalg::dot(n, x);
            worst = worst.max((got - target).to_f64().unwrap().abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gram_defect;

    #[test]
    fn axis_aligned_hyperplane() {
        // x_1 = 2 in R^3
        let f = Flat::new(&[vec![1.0f64, 0.0, 0.0]], &[2.0, 0.0, 0.0]).unwrap();
        assert_eq!(f.codim(), 1);
        assert_eq!(f.offset(), &[2.0, 0.0, 0.0]);
        assert!(gram_defect(f.normals()) < tol::ORTHONORMALITY);
    }

    #[test]
    fn diagonal_hyperplane_recovers_direction_and_offset() {
        // normals [(1,1)/sqrt(2)], offset (1/2, 1/2) = (1/sqrt(2)) * u
        let s = 1.0f64 / 2.0f64.sqrt();
        let f = Flat::new(&[vec![1.0, 1.0]], &[0.5, 0.5]).unwrap();
        assert!((f.normals()[0][0] - s).abs() < 1e-15);
        let t = linalg::dot(f.offset(), &f.normals()[0]);
        assert!((t - s).abs() < 1e-15);
        assert!(f.offset_residual() < 1e-12);
    }

    #[test]
    fn near_parallel_normals_are_rejected() {
        let r = Flat::new(&[vec![1.0f64, 0.0], vec![1.0, 1e-13]], &[0.0, 0.0]);
        assert!(matches!(r, Err(Error::DegenerateBasis { .. })));
    }

    #[test]
    fn offset_outside_the_normal_span_is_rejected() {
        let r = Flat::new(&[vec![1.0f64, 0.0]], &[1.0, 0.5]);
        match r {
            Err(Error::InconsistentOffset { residual }) => {
                assert!((residual - 0.5).abs() < 1e-12);
            }
            other => panic!("expected inconsistent-offset error, got {other:?}"),
        }
    }

    #[test]
    fn covariance_is_a_projector_with_the_right_trace() {
        let f = Flat::new(
            &[vec![1.0f64, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            &[1.0, 1.0, -2.0],
        )
        .unwrap();
        let g = SubspaceGaussian::new(f);
        let c = g.covariance();
        let d = 3;
        // symmetric, idempotent, annihilates the mean, trace = d - n
        let mut trace = 0.0;
        for i in 0..d {
            trace += c[i][i];
            for j in 0..d {
                assert!((c[i][j] - c[j][i]).abs() < tol::ORTHONORMALITY);
                let cc: f64 = (0..d).map(|k| c[i][k] * c[k][j]).sum();
                assert!((cc - c[i][j]).abs() < tol::ORTHONORMALITY);
            }
            let cm: f64 = (0..d).map(|j| c[i][j] * g.mean()[j]).sum();
            assert!(cm.abs() < tol::ORTHONORMALITY);
        }
        assert!((trace - 1.0).abs() < tol::ORTHONORMALITY);
    }

    #[test]
    fn char_functional_closed_forms() {
        // hyperplane x_1 = a: k = e_1 gives e^{ia}, k = e_2 gives e^{-1/2}
        let a = 0.7f64;
        let f = Flat::new(&[vec![1.0, 0.0]], &[a, 0.0]).unwrap();
        let g = SubspaceGaussian::new(f);
        let c1 = g.char_functional(&[1.0, 0.0]).unwrap();
        assert!((c1.re - a.cos()).abs() < 1e-15 && (c1.im - a.sin()).abs() < 1e-15);
        let c2 = g.char_functional(&[0.0, 1.0]).unwrap();
        assert!((c2.re - (-0.5f64).exp()).abs() < 1e-15 && c2.im.abs() < 1e-16);
        // whole space: e^{-||k||^2/2}
        let w = SubspaceGaussian::new(Flat::<f64>::full_space(2));
        let c3 = w.char_functional(&[1.0, 2.0]).unwrap();
        assert!((c3.re - (-2.5f64).exp()).abs() < 1e-15 && c3.im.abs() < 1e-16);
    }

    #[test]
    fn pw_mean_var_closed_forms() {
        let s = 1.0f64 / 2.0f64.sqrt();
        let u = vec![s, s];
        let f = Flat::hyperplane(&u, 1.0).unwrap();
        let g = SubspaceGaussian::new(f);
        // along the normal: variance 0, mean t
        let (m, v) = g.pw_mean_var(&u).unwrap();
        assert!((m - 1.0).abs() < 1e-14 && v.abs() < 1e-14);
        // h = e_1: mean <p, e_1> = 1/sqrt(2), variance ||P e_1||^2 = 1/2,
        // cross-checked against the projector arithmetic by hand
        let (m, v) = g.pw_mean_var(&[1.0, 0.0]).unwrap();
        assert!((m - s).abs() < 1e-14 && (v - 0.5).abs() < 1e-14);
        // h orthogonal to the normal: mean 0, variance ||h||^2
        let h = vec![2.0 * s, -2.0 * s];
        let (m, v) = g.pw_mean_var(&h).unwrap();
        assert!(m.abs() < 1e-14 && (v - 4.0).abs() < 1e-13);
    }

    #[test]
    fn point_flat_sampling_returns_the_point() {
        let p = vec![1.5f64, -2.0, 0.25];
        let g = SubspaceGaussian::new(Flat::point(&p).unwrap());
        for x in g.samples(9, 10) {
            for (xi, pi) in x.iter().zip(&p) {
                assert!((xi - pi).abs() <= tol::CONCENTRATION);
            }
        }
    }

    #[test]
    fn samples_concentrate_on_the_flat() {
        let f = Flat::new(
            &[vec![1.0f64, 2.0, 2.0]],
            &[1.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0],
        )
        .unwrap();
        let g = SubspaceGaussian::new(f.clone());
        let xs = g.samples(42, 2000);
        assert!(concentration_defect(&f, &xs) <= tol::CONCENTRATION);
    }

    #[test]
    fn identical_seeds_shift_samples_by_the_offset() {
        let n = vec![vec![3.0f64, 4.0, 0.0]];
        let p = vec![0.6, 0.8, 0.0];
        let centered = SubspaceGaussian::new(Flat::new(&n, &[0.0, 0.0, 0.0]).unwrap());
        let shifted = SubspaceGaussian::new(Flat::new(&n, &p).unwrap());
        let a = centered.samples(7, 100);
        let b = shifted.samples(7, 100);
        for (x0, x1) in a.iter().zip(&b) {
            for i in 0..3 {
                // exact equality: the sampler adds the offset last
                assert_eq!(x0[i] + shifted.mean()[i], x1[i]);
            }
        }
    }

    #[test]
    fn sample_prefix_is_count_independent() {
        let g = SubspaceGaussian::new(Flat::<f64>::full_space(2));
        let a = g.samples(11, 10);
        let b = g.samples(11, 100);
        assert_eq!(a[..], b[..10]);
    }

    #[test]
    fn empirical_char_functional_matches_analytic() {
        let f = Flat::new(&[vec![1.0f64, 1.0]], &[0.5, 0.5]).unwrap();
        let g = SubspaceGaussian::new(f);
        let n = 20_000usize;
        let xs = g.samples(3, n);
        for k in [vec![1.0, 0.0], vec![0.3, -0.7], vec![2.0, 1.0]] {
            let mut acc = Complex::new(0.0, 0.0);
            for x in &xs {
                let t = linalg::dot(&k, x);
                acc += Complex::new(t.cos(), t.sin());
            }
            let emp = acc / n as f64;
            let ana = g.char_functional(&k).unwrap();
            assert!((emp - ana).norm() < 5.0 / (n as f64).sqrt());
        }
    }
}
