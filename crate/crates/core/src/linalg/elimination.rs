//! Gaussian elimination over any [`Field`]: LU with partial pivoting and
//! reduced row echelon form with the accumulated row transform.
//!
//! Over `BigRational` the pivot threshold is 0 and every rank decision is
//! exact; over floats it is a caller-supplied absolute threshold.

use crate::linalg::LinalgError;
use crate::matrix::Matrix;
use crate::scalar::Field;

/// `P·M = L·U` packed in one matrix.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Field> Lu<T> {
    /// Fails with [`LinalgError::Singular`] when a pivot magnitude is `<= pivot_tol`.
    pub fn new(m: &Matrix<T>, pivot_tol: f64) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::ShapeMismatch { expected: "square".into(), found: m.shape() });
        }
        let n = m.rows();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|i| (i, lu[(i, k)].magnitude()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best <= pivot_tol || best == 0.0 {
                return Err(LinalgError::Singular);
            }
            lu.swap_rows(k, p);
            perm.swap(k, p);
            let pivot = lu[(k, k)].clone();
            for i in (k + 1)..n {
                if lu[(i, k)].is_zero() {
                    continue;
                }
                let f = lu[(i, k)].clone() / pivot.clone();
                for j in (k + 1)..n {
                    let v = lu[(i, j)].clone() - f.clone() * lu[(k, j)].clone();
                    lu[(i, j)] = v;
                }
                lu[(i, k)] = f;
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn solve_vec(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p].clone()).collect();
        for i in 0..n {
            for j in 0..i {
                let v = x[i].clone() - self.lu[(i, j)].clone() * x[j].clone();
                x[i] = v;
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                let v = x[i].clone() - self.lu[(i, j)].clone() * x[j].clone();
                x[i] = v;
            }
            x[i] = x[i].clone() / self.lu[(i, i)].clone();
        }
        x
    }

    pub fn solve(&self, b: &Matrix<T>) -> Matrix<T> {
        assert_eq!(b.rows(), self.dim());
        let mut out = Matrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            out.set_column(j, &self.solve_vec(&b.column(j)));
        }
        out
    }

    pub fn inverse(&self) -> Matrix<T> {
        self.solve(&Matrix::identity(self.dim()))
    }
}

/// Reduced row echelon form restricted to the leading `pivot_cols` columns.
#[derive(Debug, Clone)]
pub struct Echelon<T> {
    /// `transform · input`; rows `0..rank` carry pivots, the rest are zero
    /// in the pivot block.
    pub reduced: Matrix<T>,
    /// Nonsingular row transform accumulated during elimination.
    pub transform: Matrix<T>,
    pub pivot_columns: Vec<usize>,
    /// Smallest accepted and largest rejected pivot magnitudes, for
    /// tolerance diagnostics.
    pub smallest_pivot: f64,
    pub largest_rejected: f64,
}

impl<T> Echelon<T> {
    pub fn rank(&self) -> usize {
        self.pivot_columns.len()
    }
}

/// Row-reduce `m` using only its first `pivot_cols` columns as pivot
/// candidates; all columns are transformed. Entries in the pivot block of
/// the non-pivot rows that fall below `pivot_tol` are cleared to exact zero.
pub fn row_reduce<T: Field>(m: &Matrix<T>, pivot_cols: usize, pivot_tol: f64) -> Echelon<T> {
    let (rows, cols) = m.shape();
    assert!(pivot_cols <= cols);
    let mut a = m.hstack(&Matrix::identity(rows));
    let total = cols + rows;
    let mut pivots = Vec::new();
    let mut smallest_pivot = f64::INFINITY;
    let mut largest_rejected = 0.0f64;
    let mut r = 0;
    for c in 0..pivot_cols {
        if r == rows {
            break;
        }
        let (p, best) = (r..rows)
            .map(|i| (i, a[(i, c)].magnitude()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= pivot_tol || best == 0.0 {
            largest_rejected = largest_rejected.max(best.max(0.0));
            continue;
        }
        smallest_pivot = smallest_pivot.min(best);
        a.swap_rows(r, p);
        let pivot = a[(r, c)].clone();
        for j in 0..total {
            let v = a[(r, j)].clone() / pivot.clone();
            a[(r, j)] = v;
        }
        for i in 0..rows {
            if i == r || a[(i, c)].is_zero() {
                continue;
            }
            let f = a[(i, c)].clone();
            for j in 0..total {
                let v = a[(i, j)].clone() - f.clone() * a[(r, j)].clone();
                a[(i, j)] = v;
            }
        }
        pivots.push(c);
        r += 1;
    }
    for i in r..rows {
        for j in 0..pivot_cols {
            let mag = a[(i, j)].magnitude();
            if mag != 0.0 {
                largest_rejected = largest_rejected.max(mag);
            }
            a[(i, j)] = T::zero();
        }
    }
    Echelon {
        reduced: a.block(0, rows, 0, cols),
        transform: a.block(0, rows, cols, total),
        pivot_columns: pivots,
        smallest_pivot,
        largest_rejected,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn lu_solves() {
        let a = Matrix::<f64>::from_rows(&[vec![0.0, 2.0], vec![3.0, 1.0]]);
        let lu = Lu::new(&a, 1e-14).unwrap();
        let x = lu.solve_vec(&[4.0, 5.0]);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
        let inv = lu.inverse();
        assert!((&a.matmul(&inv) - &Matrix::identity(2)).max_abs() < 1e-14);
    }

    #[test]
    fn lu_detects_singular() {
        let a = Matrix::<f64>::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert_eq!(Lu::new(&a, 1e-12).unwrap_err(), LinalgError::Singular);
    }

    #[test]
    fn exact_rational_inverse() {
        let a = Matrix::from_rows(&[vec![q(2, 1), q(1, 1)], vec![q(1, 1), q(3, 1)]]);
        let inv = Lu::new(&a, 0.0).unwrap().inverse();
        assert_eq!(inv[(0, 0)], q(3, 5));
        assert_eq!(inv[(0, 1)], q(-1, 5));
        assert_eq!(a.matmul(&inv), Matrix::identity(2));
    }

    #[test]
    fn echelon_transform_is_consistent() {
        let a = Matrix::<f64>::from_rows(&[vec![1.0, 2.0, 5.0], vec![2.0, 4.0, 1.0], vec![0.0, 1.0, 0.0]]);
        let e = row_reduce(&a, 2, 1e-12);
        assert_eq!(e.rank(), 2);
        assert!((&e.transform.matmul(&a) - &e.reduced).max_abs() < 1e-12);
        assert_eq!(e.reduced[(2, 0)], 0.0);
        assert_eq!(e.reduced[(2, 1)], 0.0);
        assert!(e.reduced[(2, 2)].abs() > 1.0);
    }
}
