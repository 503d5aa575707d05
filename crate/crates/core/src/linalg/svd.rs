//! One-sided Jacobi (Hestenes) SVD and the rank / kernel / pseudo-inverse
//! helpers built on it.

use crate::linalg::LinalgError;
use crate::matrix::Matrix;
use crate::scalar::Real;

const MAX_SWEEPS: usize = 80;

/// Thin SVD `M = U·diag(σ)·Vᵀ` with `σ` sorted descending.
///
/// `v` is always a full `n×n` orthogonal matrix, so the trailing columns
/// span the kernel. `u` has `n` columns; a column whose singular value is
/// zero is left as zeros.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub u: Matrix<T>,
    pub sigma: Vec<T>,
    pub v: Matrix<T>,
    rows: usize,
}

pub(crate) fn check_finite<T: Real>(m: &Matrix<T>) -> Result<(), LinalgError> {
    if m.as_slice().iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(LinalgError::InvalidMatrix)
    }
}

impl<T: Real> Svd<T> {
    pub fn new(m: &Matrix<T>) -> Result<Self, LinalgError> {
        check_finite(m)?;
        let (rows, n) = m.shape();
        // Pad with zero rows so the working matrix is at least square; this
        // leaves σ and V unchanged and keeps V full.
        let mrows = rows.max(n);
        // Columns of the working matrix and of V, each stored contiguously.
        let mut w: Vec<Vec<T>> = (0..n)
            .map(|j| {
                let mut c = vec![T::zero(); mrows];
                for (i, x) in c.iter_mut().enumerate().take(rows) {
                    *x = m[(i, j)];
                }
                c
            })
            .collect();
        let mut v: Vec<Vec<T>> = (0..n)
            .map(|j| {
                let mut c = vec![T::zero(); n];
                c[j] = T::one();
                c
            })
            .collect();
        let eps = T::eps();
        let dot = |a: &[T], b: &[T]| a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y);
        // Columns below ε·‖M‖_F are numerical zeros; rotating them against
        // each other never converges in the relative test.
        let frob2 = w.iter().fold(T::zero(), |acc, c| acc + dot(c, c));
        let negligible = eps * eps * frob2;

        fn rotate<T: Real>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
            let (lo, hi) = cols.split_at_mut(q);
            for (a, b) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                let (x, y) = (*a, *b);
                *a = c * x - s * y;
                *b = s * x + c * y;
            }
        }

        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let alpha = dot(&w[p], &w[p]);
                    let beta = dot(&w[q], &w[q]);
                    if alpha <= negligible || beta <= negligible {
                        continue;
                    }
                    let gamma = dot(&w[p], &w[q]);
                    if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                    let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = c * t;
                    rotate(&mut w, p, q, c, s);
                    rotate(&mut v, p, q, c, s);
                }
            }
            if !rotated {
                break;
            }
        }

        let norms: Vec<T> = w.iter().map(|c| dot(c, c).sqrt()).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));

        let mut u = Matrix::<T>::zeros(rows, n);
        let mut vs = Matrix::<T>::zeros(n, n);
        let mut sigma = Vec::with_capacity(n);
        for (k, &j) in order.iter().enumerate() {
            let s = norms[j];
            sigma.push(s);
            if s > T::zero() {
                for i in 0..rows {
                    u[(i, k)] = w[j][i] / s;
                }
            }
            for i in 0..n {
                vs[(i, k)] = v[j][i];
            }
        }
        Ok(Self { u, sigma, v: vs, rows })
    }

    pub fn sigma_max(&self) -> T {
        self.sigma.first().copied().unwrap_or_else(T::zero)
    }

    /// Default rank threshold `max(m,n)·ε·σ_max`.
    pub fn default_tolerance(&self) -> T {
        let dim = self.rows.max(self.v.rows());
        T::lit(dim as f64) * T::eps() * self.sigma_max()
    }

    pub fn rank(&self, tol: Option<T>) -> usize {
        let tau = tol.unwrap_or_else(|| self.default_tolerance());
        self.sigma.iter().filter(|&&s| s > tau).count()
    }

    /// Orthonormal basis of `ker M` (trailing right singular vectors).
    pub fn kernel(&self, tol: Option<T>) -> Matrix<T> {
        let r = self.rank(tol);
        let n = self.v.rows();
        self.v.block(0, n, r, n)
    }

    /// Orthonormal basis of `range M`.
    pub fn range(&self, tol: Option<T>) -> Matrix<T> {
        let r = self.rank(tol);
        self.u.block(0, self.rows, 0, r)
    }

    /// Orthonormal basis of `range Mᵀ`.
    pub fn corange(&self, tol: Option<T>) -> Matrix<T> {
        let r = self.rank(tol);
        self.v.block(0, self.v.rows(), 0, r)
    }

    pub fn pseudo_inverse(&self, tol: Option<T>) -> Matrix<T> {
        let r = self.rank(tol);
        let n = self.v.rows();
        let mut out = Matrix::<T>::zeros(n, self.rows);
        for k in 0..r {
            let inv = T::one() / self.sigma[k];
            for i in 0..n {
                let vik = self.v[(i, k)] * inv;
                if vik == T::zero() {
                    continue;
                }
                for j in 0..self.rows {
                    out[(i, j)] = out[(i, j)] + vik * self.u[(j, k)];
                }
            }
        }
        out
    }
}

/// Numerical rank: count of singular values above `tol`, or above
/// `max(m,n)·ε·σ_max` when `tol` is absent.
pub fn rank_svd<T: Real>(m: &Matrix<T>, tol: Option<T>) -> Result<usize, LinalgError> {
    if let Some(t) = tol {
        if !(t >= T::zero()) {
            return Err(LinalgError::InvalidTolerance);
        }
    }
    Ok(Svd::new(m)?.rank(tol))
}

/// Orthonormal kernel basis as columns; `cols − rank` of them.
pub fn null_space_basis<T: Real>(m: &Matrix<T>, tol: Option<T>) -> Result<Matrix<T>, LinalgError> {
    Ok(Svd::new(m)?.kernel(tol))
}

pub fn pseudo_inverse<T: Real>(m: &Matrix<T>, tol: Option<T>) -> Result<Matrix<T>, LinalgError> {
    Ok(Svd::new(m)?.pseudo_inverse(tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<f64>]) -> Matrix<f64> {
        Matrix::from_rows(rows)
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank_svd(&Matrix::<f64>::identity(3), None).unwrap(), 3);
        assert_eq!(rank_svd(&Matrix::<f64>::zeros(2, 4), None).unwrap(), 0);
        let a = m(&[vec![1.0, 1.0], vec![2.0, 2.0]]);
        let svd = Svd::new(&a).unwrap();
        assert!((svd.sigma[0] - 10f64.sqrt()).abs() < 1e-14);
        assert!(svd.sigma[1].abs() < 1e-14);
        assert_eq!(svd.rank(None), 1);
    }

    #[test]
    fn non_finite_rejected() {
        let a = m(&[vec![f64::NAN]]);
        assert_eq!(rank_svd(&a, None), Err(LinalgError::InvalidMatrix));
        assert_eq!(rank_svd(&m(&[vec![1.0]]), Some(-1.0)), Err(LinalgError::InvalidTolerance));
    }

    #[test]
    fn kernel_examples() {
        let k = null_space_basis(&m(&[vec![1.0, 1.0]]), None).unwrap();
        assert_eq!(k.shape(), (2, 1));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((k[(0, 0)].abs() - s).abs() < 1e-15);
        assert!((k[(0, 0)] + k[(1, 0)]).abs() < 1e-15);
        assert_eq!(null_space_basis(&Matrix::<f64>::identity(3), None).unwrap().cols(), 0);
        let z = null_space_basis(&Matrix::<f64>::zeros(3, 3), None).unwrap();
        assert_eq!(z.cols(), 3);
        let g = z.transpose().matmul(&z);
        assert!((&g - &Matrix::identity(3)).max_abs() < 1e-15);
    }

    #[test]
    fn wide_matrix_reconstructs() {
        let a = m(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.5]]);
        let svd = Svd::new(&a).unwrap();
        let us = Matrix::from_fn(2, 3, |i, k| svd.u[(i, k)] * svd.sigma[k]);
        let rec = us.matmul(&svd.v.transpose());
        assert!((&rec - &a).max_abs() < 1e-13);
        let pinv = svd.pseudo_inverse(None);
        assert!((&a.matmul(&pinv) - &Matrix::identity(2)).max_abs() < 1e-12);
    }

    #[test]
    fn works_in_f32() {
        let a = Matrix::<f32>::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0]]);
        assert_eq!(rank_svd(&a, None).unwrap(), 1);
    }
}
