//! Orthogonal projectors onto and along the kernel of a matrix.

use serde::{Deserialize, Serialize};

use crate::linalg::svd::Svd;
use crate::linalg::LinalgError;
use crate::matrix::Matrix;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectorKind {
    /// `Q` with `range Q = ker M`.
    OntoKernel,
    /// `P = I − Q`, so `ker P = ker M`.
    AlongKernel,
}

#[derive(Debug, Clone)]
pub struct Projector<T> {
    pub matrix: Matrix<T>,
    pub kind: ProjectorKind,
    /// Name of the matrix whose kernel was used, for reports.
    pub source: String,
    pub tolerance: T,
}

impl<T: Real> Projector<T> {
    /// `‖Q² − Q‖_max`.
    pub fn idempotence_defect(&self) -> f64 {
        let q2 = self.matrix.matmul(&self.matrix);
        (&q2 - &self.matrix).max_abs()
    }

    pub fn complement(&self) -> Projector<T> {
        let n = self.matrix.rows();
        Projector {
            matrix: &Matrix::identity(n) - &self.matrix,
            kind: match self.kind {
                ProjectorKind::OntoKernel => ProjectorKind::AlongKernel,
                ProjectorKind::AlongKernel => ProjectorKind::OntoKernel,
            },
            source: self.source.clone(),
            tolerance: self.tolerance,
        }
    }
}

fn kernel_basis<T: Real>(m: &Matrix<T>, tol: Option<T>) -> Result<(Matrix<T>, T), LinalgError> {
    if let Some(t) = tol {
        if !(t >= T::zero()) {
            return Err(LinalgError::InvalidTolerance);
        }
    }
    let svd = Svd::new(m)?;
    let tau = tol.unwrap_or_else(|| svd.default_tolerance());
    Ok((svd.kernel(Some(tau)), tau))
}

/// `Q = B·Bᵀ` with `B` an orthonormal basis of `ker M`.
pub fn projector_onto_kernel<T: Real>(m: &Matrix<T>, tol: Option<T>, source: &str) -> Result<Projector<T>, LinalgError> {
    let (b, tau) = kernel_basis(m, tol)?;
    Ok(Projector { matrix: b.matmul(&b.transpose()), kind: ProjectorKind::OntoKernel, source: source.into(), tolerance: tau })
}

/// `P = I − Q`.
pub fn projector_along_kernel<T: Real>(m: &Matrix<T>, tol: Option<T>, source: &str) -> Result<Projector<T>, LinalgError> {
    Ok(projector_onto_kernel(m, tol, source)?.complement())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projector_example() {
        let m = Matrix::<f64>::from_rows(&[vec![1.0, -1.0]]);
        let q = projector_onto_kernel(&m, None, "m").unwrap();
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert!((q.matrix[(i, j)] - 0.5).abs() < 1e-15);
        }
        assert!(m.matmul(&q.matrix).max_abs() < 1e-15);
        let p = projector_along_kernel(&m, None, "m").unwrap();
        assert!((p.matrix[(0, 1)] + 0.5).abs() < 1e-15);
        assert!(p.idempotence_defect() < 1e-15);
    }

    #[test]
    fn full_rank_gives_zero_projector() {
        let q = projector_onto_kernel(&Matrix::<f64>::identity(3), None, "I").unwrap();
        assert!(q.matrix.is_zero_matrix());
    }
}
