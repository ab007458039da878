//! Small dense vector helpers sized for the ambient dimensions this crate
//! works at (d up to a few hundred). Ordinary `Vec` storage; orthogonality is
//! maintained by modified Gram-Schmidt with one reorthogonalization pass.

use crate::error::{Error, Result};
use crate::real::Real;
use crate::tol;

/// Dense row-major matrix alias used for covariance projectors.
pub type Matrix<T> = Vec<Vec<T>>;

/// Euclidean inner product. Panics on length mismatch (internal use only;
/// public entry points validate dimensions first).
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// `a + s*b` elementwise.
pub fn axpy<T: Real>(a: &[T], s: T, b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + s * y).collect()
}

/// `a - b` elementwise.
pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// `s*a` elementwise.
pub fn scale<T: Real>(a: &[T], s: T) -> Vec<T> {
    a.iter().map(|&x| s * x).collect()
}

/// Projection of `x` onto the span of orthonormal rows `basis`:
/// `sum_k <x, b_k> b_k`.
pub fn project_onto_span<T: Real>(basis: &[Vec<T>], x: &[T]) -> Vec<T> {
    let mut p = vec![T::zero(); x.len()];
    for b in basis {
        let c = dot(b, x);
        for (pi, &bi) in p.iter_mut().zip(b) {
            *pi += c * bi;
        }
    }
    p
}

/// Component of `x` orthogonal to the span of orthonormal rows `basis`.
pub fn project_out_span<T: Real>(basis: &[Vec<T>], x: &[T]) -> Vec<T> {
    let mut r = x.to_vec();
    for b in basis {
        let c = dot(b, &r);
        for (ri, &bi) in r.iter_mut().zip(b) {
            *ri -= c * bi;
        }
    }
    r
}

/// Orthonormalizes `vectors` by modified Gram-Schmidt with a second
/// orthogonalization pass per vector.
///
/// Returns an error naming the offending vector when one is zero or when its
/// residual after orthogonalization falls below [`tol::RANK_DEFICIENCY`]
/// times its original norm (linear dependence).
pub fn orthonormalize<T: Real>(vectors: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(vectors.len());
    for (idx, v) in vectors.iter().enumerate() {
        let original = norm(v);
        if original == T::zero() {
            return Err(Error::DegenerateBasis {
                detail: format!("normal #{idx} is the zero vector"),
            });
        }
        let mut r = project_out_span(&basis, v);
        r = project_out_span(&basis, &r);
        let rn = norm(&r);
        if rn.to_f64().unwrap() <= tol::RANK_DEFICIENCY * original.to_f64().unwrap() {
            return Err(Error::DegenerateBasis {
                detail: format!(
                    "normal #{idx} is linearly dependent on the previous ones \
                     (residual ratio {:.3e})",
                    rn.to_f64().unwrap() / original.to_f64().unwrap()
                ),
            });
        }
        let inv = T::one() / rn;
        basis.push(scale(&r, inv));
    }
    Ok(basis)
}

/// Extends the orthonormal set `basis` (rows of length `dim`) to a full
/// orthonormal basis of R^dim, returning only the new vectors.
///
/// Candidates are the coordinate axes; the `dim - basis.len()` survivors of
/// Gram-Schmidt are returned in axis order.
pub fn complete_basis<T: Real>(basis: &[Vec<T>], dim: usize) -> Vec<Vec<T>> {
    let needed = dim - basis.len();
    let mut all: Vec<Vec<T>> = basis.to_vec();
    let mut fresh: Vec<Vec<T>> = Vec::with_capacity(needed);
    for axis in 0..dim {
        if fresh.len() == needed {
            break;
        }
        let mut e = vec![T::zero(); dim];
        e[axis] = T::one();
        let mut r = project_out_span(&all, &e);
        r = project_out_span(&all, &r);
        let rn = norm(&r);
        // an axis nearly inside the current span contributes nothing new
        if rn.to_f64().unwrap() <= 1e-8 {
            continue;
        }
        let inv = T::one() / rn;
        let u = scale(&r, inv);
        all.push(u.clone());
        fresh.push(u);
    }
    debug_assert_eq!(fresh.len(), needed);
    fresh
}

/// Max absolute entry of `Gram(basis) - I`; the orthonormality defect.
pub fn gram_defect<T: Real>(basis: &[Vec<T>]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            let g = dot(&basis[i], &basis[j]).to_f64().unwrap();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormalize_rotates_and_normalizes() {
        let v = vec![vec![3.0f64, 0.0, 0.0], vec![1.0, 1.0, 0.0]];
        let b = orthonormalize(&v).unwrap();
        assert!(gram_defect(&b) < 1e-14);
        // span preserved: second basis vector lies in the xy-plane
        assert!(b[1][2].abs() < 1e-15);
    }

    #[test]
    fn orthonormalize_rejects_parallel_vectors() {
        let v = vec![vec![1.0f64, 0.0], vec![1.0, 1e-13]];
        match orthonormalize(&v) {
            Err(Error::DegenerateBasis { .. }) => {}
            other => panic!("expected degenerate-basis error, got {other:?}"),
        }
    }

    #[test]
    fn orthonormalize_rejects_zero_vector() {
        let v = vec![vec![0.0f64, 0.0]];
        assert!(matches!(
            orthonormalize(&v),
            Err(Error::DegenerateBasis { .. })
        ));
    }

    #[test]
    fn complete_basis_fills_the_orthogonal_complement() {
        let u = 1.0f64 / 2.0f64.sqrt();
        let b = vec![vec![u, u, 0.0]];
        let rest = complete_basis(&b, 3);
        assert_eq!(rest.len(), 2);
        let mut full = b.clone();
        full.extend(rest);
        assert!(gram_defect(&full) < 1e-12);
    }

    #[test]
    fn projections_split_a_vector() {
        let u = 1.0f64 / 2.0f64.sqrt();
        let b = vec![vec![u, u]];
        let x = vec![1.0, 0.0];
        let p = project_onto_span(&b, &x);
        let q = project_out_span(&b, &x);
        for i in 0..2 {
            assert!((p[i] + q[i] - x[i]).abs() < 1e-15);
        }
        assert!(dot(&q, &b[0]).abs() < 1e-15);
    }
}
