//! Differentiation index of a linear pencil `E z' + A z = F σ(t)` by the
//! shuffle algorithm: compress `E` with the left singular vectors, move the
//! algebraic rows into `E` by differentiating them, repeat until `E` is
//! nonsingular. The number of rounds is the index.

use serde::{Deserialize, Serialize};

use crate::linalg::svd::Svd;
use crate::linalg::LinalgError;
use crate::matrix::Matrix;
use crate::scalar::Real;

/// Default relative rank threshold, scaled by the largest entry of `[E A]`.
pub const DEFAULT_PENCIL_TOL: f64 = 1e-10;

const PROBE_LAMBDAS: [f64; 4] = [0.618_033_988_7, -1.414_213_562, 2.718_281_828, 7.389_056_099];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PencilIndexResult {
    pub index: usize,
    pub shuffle_steps: usize,
    pub regular: bool,
}

/// Result of [`shuffle`]. All rows are equivalent (up to differentiation)
/// to the input system.
#[derive(Debug, Clone)]
pub struct Shuffle<T> {
    pub index: usize,
    /// Final system with nonsingular `e`.
    pub e: Matrix<T>,
    pub a: Matrix<T>,
    pub f: Matrix<T>,
    /// Stacked algebraic rows met along the way: `constraints·z = constraint_rhs·σ`.
    pub constraints: Matrix<T>,
    pub constraint_rhs: Matrix<T>,
}

fn check_shapes<T>(e: &Matrix<T>, a: &Matrix<T>) -> Result<(), LinalgError> {
    if !e.is_square() {
        return Err(LinalgError::ShapeMismatch { expected: "square E".into(), found: e.shape() });
    }
    if a.shape() != e.shape() {
        return Err(LinalgError::ShapeMismatch { expected: format!("A of shape {:?}", e.shape()), found: a.shape() });
    }
    Ok(())
}

/// Regular iff `λE + A` has full rank for at least one of a few fixed,
/// generic λ values. The probes are taken relative to `‖A‖/‖E‖`, so the
/// answer does not change when `E` and `A` are scaled independently.
pub fn is_regular<T: Real>(e: &Matrix<T>, a: &Matrix<T>, tol: Option<f64>) -> Result<bool, LinalgError> {
    check_shapes(e, a)?;
    let n = e.rows();
    if n == 0 {
        return Ok(true);
    }
    let (ne, na) = (e.max_abs(), a.max_abs());
    let ratio = if ne > 0.0 && na > 0.0 { na / ne } else { 1.0 };
    let rel = tol.unwrap_or(DEFAULT_PENCIL_TOL);
    for &lambda in &PROBE_LAMBDAS {
        let l = lambda * ratio;
        let scale = (l.abs() * ne).max(na);
        if scale == 0.0 {
            return Ok(false);
        }
        let m = &e.scale(&T::lit(l)) + a;
        if Svd::new(&m)?.rank(Some(T::lit(rel * scale))) == n {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Runs the shuffle on `E z' + A z = F σ`, where `σ' = shift·σ`.
///
/// `f` may have zero columns; `shift` is then ignored. A missing `shift`
/// with a non-empty `f` treats the forcing as constant.
pub fn shuffle<T: Real>(
    e: &Matrix<T>,
    a: &Matrix<T>,
    f: &Matrix<T>,
    shift: Option<&Matrix<T>>,
    tol: Option<f64>,
) -> Result<Shuffle<T>, LinalgError> {
    check_shapes(e, a)?;
    let n = e.rows();
    let s = f.cols();
    if f.rows() != n {
        return Err(LinalgError::ShapeMismatch { expected: format!("F with {n} rows"), found: f.shape() });
    }
    if let Some(sh) = shift {
        if sh.shape() != (s, s) {
            return Err(LinalgError::ShapeMismatch { expected: format!("shift {s}x{s}"), found: sh.shape() });
        }
    }
    let rel = tol.unwrap_or(DEFAULT_PENCIL_TOL);
    if !(rel >= 0.0) {
        return Err(LinalgError::InvalidTolerance);
    }
    if !is_regular(e, a, tol)? {
        return Err(LinalgError::SingularPencil);
    }
    let thresh = T::lit(rel * e.max_abs().max(a.max_abs()).max(1.0));

    let (mut e, mut a, mut f) = (e.clone(), a.clone(), f.clone());
    let mut cons = Matrix::<T>::zeros(0, n);
    let mut rhs = Matrix::<T>::zeros(0, s);
    for step in 0..=n {
        // The right singular vectors of Eᵀ form a full orthogonal set of
        // left singular vectors of E.
        let svd = Svd::new(&e.transpose())?;
        let r = svd.rank(Some(thresh));
        if r == n {
            return Ok(Shuffle { index: step, e, a, f, constraints: cons, constraint_rhs: rhs });
        }
        let ut = svd.v.transpose();
        let ue = ut.matmul(&e);
        let ua = ut.matmul(&a);
        let uf = ut.matmul(&f);
        let alg_a = ua.block(r, n, 0, n);
        let alg_f = uf.block(r, n, 0, s);
        cons = cons.vstack(&alg_a);
        rhs = rhs.vstack(&alg_f);
        let df = match shift {
            Some(sh) if s > 0 => alg_f.matmul(sh),
            _ => alg_f.clone(),
        };
        e = ue.block(0, r, 0, n).vstack(&alg_a);
        a = ua.block(0, r, 0, n).vstack(&Matrix::zeros(n - r, n));
        f = uf.block(0, r, 0, s).vstack(&df);
    }
    Err(LinalgError::SingularPencil)
}

/// Differentiation index of `E z' + A z = f`.
///
/// `E` and `A` are normalised separately first: the index of `(E, cA)` is
/// that of `(E, A)` (a rescaling of time), and the rank decisions inside
/// the shuffle then see rows of comparable magnitude.
pub fn pencil_index<T: Real>(e: &Matrix<T>, a: &Matrix<T>, tol: Option<f64>) -> Result<PencilIndexResult, LinalgError> {
    check_shapes(e, a)?;
    let unit = |m: &Matrix<T>| {
        let s = m.max_abs();
        if s > 0.0 {
            m.scale(&T::lit(1.0 / s))
        } else {
            m.clone()
        }
    };
    let (e, a) = (unit(e), unit(a));
    let f = Matrix::zeros(e.rows(), 0);
    let sh = shuffle(&e, &a, &f, None, tol)?;
    Ok(PencilIndexResult { index: sh.index, shuffle_steps: sh.index, regular: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<f64>]) -> Matrix<f64> {
        Matrix::from_rows(rows)
    }

    #[test]
    fn nilpotent_block_has_index_two() {
        let e = m(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
        let r = pencil_index(&e, &Matrix::identity(2), None).unwrap();
        assert_eq!(r.index, 2);
        assert!(r.regular);
    }

    #[test]
    fn ode_and_algebraic() {
        assert_eq!(pencil_index(&Matrix::<f64>::identity(3), &Matrix::zeros(3, 3), None).unwrap().index, 0);
        assert_eq!(pencil_index(&Matrix::<f64>::zeros(2, 2), &Matrix::identity(2), None).unwrap().index, 1);
    }

    #[test]
    fn index_survives_separate_scaling() {
        // Length-4 nilpotent chain: λE + A is badly conditioned once E and
        // A differ in scale by a few hundred.
        let e = Matrix::from_fn(4, 4, |i, j| if j == i + 1 { 1.0 } else { 0.0 });
        let a = Matrix::<f64>::identity(4);
        for (alpha, beta) in [(1.0, 1.0), (9.2, 0.028), (0.01, 100.0)] {
            let r = pencil_index(&e.scale(&alpha), &a.scale(&beta), Some(1e-10)).unwrap();
            assert_eq!(r.index, 4, "α={alpha} β={beta}");
        }
    }

    #[test]
    fn singular_pencil_detected() {
        let e = m(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
        let a = m(&[vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert_eq!(pencil_index(&e, &a, None), Err(LinalgError::SingularPencil));
    }

    #[test]
    fn constraints_are_collected() {
        // z1' + z1 = σ0, z2 = σ0  (index 1, one constraint row)
        let e = m(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
        let a = Matrix::identity(2);
        let f = m(&[vec![1.0, 0.0], vec![1.0, 0.0]]);
        let shift = m(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
        let s = shuffle(&e, &a, &f, Some(&shift), None).unwrap();
        assert_eq!(s.index, 1);
        assert_eq!(s.constraints.rows(), 1);
        let c = &s.constraints;
        let d = &s.constraint_rhs;
        // constraint is ±(z2 = σ0)
        assert!(c[(0, 0)].abs() < 1e-14);
        assert!((c[(0, 1)] - d[(0, 0)]).abs() < 1e-14);
    }
}
