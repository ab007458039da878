//! Gauss-Hermite quadrature for the standard Gaussian weight (probabilists'
//! normalization: nodes/weights integrate exactly against N(0,1), weights sum
//! to one) plus a tensor-grid driver for multi-dimensional integrals.
//!
//! Nodes are eigenvalues of the Jacobi matrix of the monic Hermite recurrence
//! (off-diagonal sqrt(k)); weights are the squared first components of the
//! normalized eigenvectors. Everything is computed in f64 and cast to the
//! caller's scalar, so node accuracy does not depend on the storage type.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::tol;

/// Nodes (ascending) and weights of the `level`-point rule for N(0,1), f64.
pub fn gauss_hermite_f64(level: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(level >= 1, "quadrature level must be positive");
    if level == 1 {
        return (vec![0.0], vec![1.0]);
    }
    let mut jacobi = DMatrix::<f64>::zeros(level, level);
    for k in 1..level {
        let b = (k as f64).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..level)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let (mut nodes, mut weights): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    // enforce the exact +/- symmetry of the rule
    for i in 0..level / 2 {
        let j = level - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -x;
        nodes[j] = x;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    if level % 2 == 1 {
        nodes[level / 2] = 0.0;
    }
    (nodes, weights)
}

/// The `level`-point rule cast to the working scalar.
pub fn gauss_hermite<T: Real>(level: usize) -> (Vec<T>, Vec<T>) {
    let (n, w) = gauss_hermite_f64(level);
    (
        n.into_iter().map(T::cast).collect(),
        w.into_iter().map(T::cast).collect(),
    )
}

/// Nodes (ascending) and weights of the `level`-point Gauss-Legendre rule
/// on `[-1, 1]` (weights sum to 2), by the same Jacobi-matrix route with
/// the Legendre recurrence off-diagonal `k / sqrt(4k^2 - 1)`.
pub fn gauss_legendre_f64(level: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(level >= 1, "quadrature level must be positive");
    if level == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut jacobi = DMatrix::<f64>::zeros(level, level);
    for k in 1..level {
        let kf = k as f64;
        let b = kf / (4.0 * kf * kf - 1.0).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..level)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], 2.0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let (mut nodes, mut weights): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    for i in 0..level / 2 {
        let j = level - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -x;
        nodes[j] = x;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    if level % 2 == 1 {
        nodes[level / 2] = 0.0;
    }
    (nodes, weights)
}

/// Calls `visit(weight, point)` for every node of the `dim`-dimensional
/// tensor product of the `level`-point rule. The point buffer is reused
/// between calls. Refuses `dim > MAX_TENSOR_DIM` (node count is
/// `level^dim`).
pub fn for_each_tensor_node<T: Real>(
    level: usize,
    dim: usize,
    mut visit: impl FnMut(T, &[T]),
) -> Result<()> {
    if dim > tol::MAX_TENSOR_DIM {
        return Err(Error::EngineUnavailable {
            detail: format!(
                "tensor quadrature over {dim} axes exceeds the {} axis limit",
                tol::MAX_TENSOR_DIM
            ),
        });
    }
    let (nodes, weights) = gauss_hermite::<T>(level);
    if dim == 0 {
        // zero-dimensional integral: a single unit-weight evaluation
        visit(T::one(), &[]);
        return Ok(());
    }
    let mut index = vec![0usize; dim];
    let mut point = vec![T::zero(); dim];
    loop {
        let mut w = T::one();
        for (axis, &i) in index.iter().enumerate() {
            point[axis] = nodes[i];
            w *= weights[i];
        }
        visit(w, &point);
        // odometer increment, last axis fastest
        let mut axis = dim;
        loop {
            if axis == 0 {
                return Ok(());
            }
            axis -= 1;
            index[axis] += 1;
            if index[axis] < level {
                break;
            }
            index[axis] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_rules_match_closed_forms() {
        // 2-point rule: nodes +/-1, weights 1/2 (roots of x^2 - 1)
        let (n, w) = gauss_hermite_f64(2);
        assert!((n[0] + 1.0).abs() < 1e-14 && (n[1] - 1.0).abs() < 1e-14);
        assert!((w[0] - 0.5).abs() < 1e-14 && (w[1] - 0.5).abs() < 1e-14);
        // 3-point rule: nodes 0, +/-sqrt(3); weights 2/3, 1/6, 1/6
        let (n, w) = gauss_hermite_f64(3);
        let s3 = 3.0f64.sqrt();
        assert!((n[0] + s3).abs() < 1e-13 && n[1] == 0.0 && (n[2] - s3).abs() < 1e-13);
        assert!((w[1] - 2.0 / 3.0).abs() < 1e-14);
        assert!((w[0] - 1.0 / 6.0).abs() < 1e-14 && (w[2] - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn moments_of_the_standard_gaussian() {
        for level in [1usize, 2, 5, 12, 32] {
            let (n, w) = gauss_hermite_f64(level);
            let total: f64 = w.iter().sum();
            assert!((total - 1.0).abs() < 1e-13, "weights sum, level {level}");
            if level >= 2 {
                let m2: f64 = n.iter().zip(&w).map(|(x, w)| w * x * x).sum();
                assert!((m2 - 1.0).abs() < 1e-12, "second moment, level {level}");
            }
            if level >= 3 {
                let m4: f64 = n.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
                assert!((m4 - 3.0).abs() < 1e-11, "fourth moment, level {level}");
            }
            // odd moments vanish by symmetry (up to summation rounding)
            let m3: f64 = n.iter().zip(&w).map(|(x, w)| w * x.powi(3)).sum();
            assert!(m3.abs() < 1e-13, "third moment, level {level}");
        }
    }

    #[test]
    fn legendre_rule_integrates_monomials_on_the_interval() {
        // known 2-point rule: nodes +/- 1/sqrt(3), weights 1
        let (n, w) = gauss_legendre_f64(2);
        let r3 = 1.0 / 3.0f64.sqrt();
        assert!((n[0] + r3).abs() < 1e-14 && (n[1] - r3).abs() < 1e-14);
        assert!((w[0] - 1.0).abs() < 1e-14 && (w[1] - 1.0).abs() < 1e-14);
        for level in [1usize, 4, 9] {
            let (n, w) = gauss_legendre_f64(level);
            let total: f64 = w.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "weights sum, level {level}");
            if level >= 2 {
                let m2: f64 = n.iter().zip(&w).map(|(x, w)| w * x * x).sum();
                assert!((m2 - 2.0 / 3.0).abs() < 1e-13, "x^2, level {level}");
            }
            if level >= 4 {
                let m6: f64 = n.iter().zip(&w).map(|(x, w)| w * x.powi(6)).sum();
                assert!((m6 - 2.0 / 7.0).abs() < 1e-13, "x^6, level {level}");
            }
            let m3: f64 = n.iter().zip(&w).map(|(x, w)| w * x.powi(3)).sum();
            assert!(m3.abs() < 1e-14, "x^3, level {level}");
        }
    }

    #[test]
    fn tensor_rule_integrates_a_product_polynomial() {
        // E[x^2 y^4] = 1 * 3 under the 2d standard Gaussian
        let mut acc = 0.0f64;
        for_each_tensor_node(6, 2, |w, p: &[f64]| {
            acc += w * p[0] * p[0] * p[1].powi(4);
        })
        .unwrap();
        assert!((acc - 3.0).abs() < 1e-11);
    }

    #[test]
    fn tensor_rule_rejects_high_dimension() {
        let r = for_each_tensor_node(4, 7, |_w, _p: &[f64]| {});
        assert!(matches!(r, Err(Error::EngineUnavailable { .. })));
    }

    #[test]
    fn zero_dimensional_rule_is_a_point_mass() {
        let mut calls = 0;
        for_each_tensor_node(5, 0, |w, p: &[f64]| {
            calls += 1;
            assert_eq!(w, 1.0);
            assert!(p.is_empty());
        })
        .unwrap();
        assert_eq!(calls, 1);
    }
}
