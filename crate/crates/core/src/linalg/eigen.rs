//! Cyclic Jacobi eigen-solver for symmetric matrices and the positive
//! definiteness test built on it.

use serde::{Deserialize, Serialize};

use crate::linalg::LinalgError;
use crate::linalg::svd::check_finite;
use crate::matrix::Matrix;
use crate::scalar::Real;

const MAX_SWEEPS: usize = 80;

/// Eigenvalues ascending, eigenvectors as matching columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

impl<T: Real> SymmetricEigen<T> {
    /// Uses only the symmetric part of `m`.
    pub fn new(m: &Matrix<T>) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::ShapeMismatch { expected: "square".into(), found: m.shape() });
        }
        check_finite(m)?;
        let n = m.rows();
        let half = T::lit(0.5);
        // Row-major symmetric working copy; eigenvector columns contiguous.
        let mut a: Vec<T> = (0..n * n).map(|k| half * (m[(k / n, k % n)] + m[(k % n, k / n)])).collect();
        let mut v: Vec<Vec<T>> = (0..n)
            .map(|j| {
                let mut c = vec![T::zero(); n];
                c[j] = T::one();
                c
            })
            .collect();
        let eps = T::eps();

        for _ in 0..MAX_SWEEPS {
            let (mut off, mut diag) = (T::zero(), T::zero());
            for i in 0..n {
                for j in 0..n {
                    let x = a[i * n + j];
                    if i == j {
                        diag = diag + x * x;
                    } else {
                        off = off + x * x;
                    }
                }
            }
            if off <= eps * eps * diag || off == T::zero() {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq == T::zero() {
                        continue;
                    }
                    let (app, aqq) = (a[p * n + p], a[q * n + q]);
                    let theta = (aqq - app) / (T::lit(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (T::one() + theta * theta).sqrt());
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        if k == p || k == q {
                            continue;
                        }
                        let (akp, akq) = (a[k * n + p], a[k * n + q]);
                        let (np, nq) = (c * akp - s * akq, s * akp + c * akq);
                        a[k * n + p] = np;
                        a[p * n + k] = np;
                        a[k * n + q] = nq;
                        a[q * n + k] = nq;
                    }
                    a[p * n + p] = app - t * apq;
                    a[q * n + q] = aqq + t * apq;
                    a[p * n + q] = T::zero();
                    a[q * n + p] = T::zero();
                    let (lo, hi) = v.split_at_mut(q);
                    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                        let (vp, vq) = (*x, *y);
                        *x = c * vp - s * vq;
                        *y = s * vp + c * vq;
                    }
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        let d = |i: usize| a[i * n + i];
        order.sort_by(|&i, &j| d(i).partial_cmp(&d(j)).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j)));
        let values = order.iter().map(|&i| d(i)).collect();
        let vectors = Matrix::from_fn(n, n, |i, k| v[order[k]][i]);
        Ok(Self { values, vectors })
    }
}

/// Outcome of [`is_positive_definite`]; `lambda_min` is the smallest
/// eigenvalue of the symmetric part and doubles as the strong-monotonicity
/// constant of `x ↦ Mx` when positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefinitenessCheck {
    pub positive_definite: bool,
    pub lambda_min: f64,
    /// Unit eigenvector of the symmetric part for `lambda_min`; a direction
    /// along which `⟨Mx, x⟩` is smallest.
    pub direction: Vec<f64>,
}

/// True iff `λ_min((M+Mᵀ)/2) > margin + 1e-12·‖M‖∞`.
///
/// An empty (0×0) matrix is vacuously positive definite with
/// `lambda_min = +∞`.
pub fn is_positive_definite<T: Real>(m: &Matrix<T>, margin: Option<f64>) -> Result<DefinitenessCheck, LinalgError> {
    let eig = SymmetricEigen::new(m)?;
    let Some(&lmin) = eig.values.first() else {
        return Ok(DefinitenessCheck { positive_definite: true, lambda_min: f64::INFINITY, direction: vec![] });
    };
    let lambda_min = lmin.as_f64();
    let threshold = margin.unwrap_or(0.0) + 1e-12 * m.norm_inf();
    let direction = eig.vectors.column(0).iter().map(|x| x.as_f64()).collect();
    Ok(DefinitenessCheck { positive_definite: lambda_min > threshold, lambda_min, direction })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<f64>]) -> Matrix<f64> {
        Matrix::from_rows(rows)
    }

    #[test]
    fn examples() {
        let c = is_positive_definite(&m(&[vec![2.0, -1.0], vec![-1.0, 2.0]]), None).unwrap();
        assert!(c.positive_definite);
        assert!((c.lambda_min - 1.0).abs() < 1e-14);

        let c = is_positive_definite(&m(&[vec![0.0, 1.0], vec![-1.0, 0.0]]), None).unwrap();
        assert!(!c.positive_definite);
        assert_eq!(c.lambda_min, 0.0);

        let c = is_positive_definite(&m(&[vec![1.0, 3.0], vec![0.0, 1.0]]), None).unwrap();
        assert!(!c.positive_definite);
        assert!((c.lambda_min + 0.5).abs() < 1e-14);
    }

    #[test]
    fn non_square_rejected() {
        assert!(matches!(
            is_positive_definite(&Matrix::<f64>::zeros(2, 3), None),
            Err(LinalgError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn margin_is_respected() {
        let a = Matrix::<f64>::diag(&[0.5, 2.0]);
        assert!(is_positive_definite(&a, Some(0.4)).unwrap().positive_definite);
        assert!(!is_positive_definite(&a, Some(0.6)).unwrap().positive_definite);
    }

    #[test]
    fn eigen_decomposition_reconstructs() {
        let a = m(&[vec![4.0, 1.0, 0.5], vec![1.0, 3.0, -0.2], vec![0.5, -0.2, 1.0]]);
        let e = SymmetricEigen::new(&a).unwrap();
        let vd = Matrix::from_fn(3, 3, |i, k| e.vectors[(i, k)] * e.values[k]);
        let rec = vd.matmul(&e.vectors.transpose());
        assert!((&rec - &a).max_abs() < 1e-13);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }
}
