use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::matrix::DenseMatrix;

/// Square tridiagonal matrix solved by elimination without pivoting.
///
/// Upper bidiagonal matrices are the special case `lower = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal<T> {
    lower: Vec<T>,
    diag: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> Tridiagonal<T> {
    pub fn new(lower: Vec<T>, diag: Vec<T>, upper: Vec<T>) -> Result<Self> {
        let n = diag.len();
        if n == 0 || lower.len() != n - 1 || upper.len() != n - 1 {
            return Err(Error::ShapeMismatch("tridiagonal band lengths".into()));
        }
        Ok(Self { lower, diag, upper })
    }

    /// Extracts the bands of `a`, or `None` if `a` has entries outside them.
    pub fn from_dense(a: &DenseMatrix<T>) -> Option<Self> {
        if !a.is_square() || a.rows() == 0 {
            return None;
        }
        let n = a.rows();
        for i in 0..n {
            for j in 0..n {
                if (i as isize - j as isize).abs() > 1 && a[(i, j)] != T::zero() {
                    return None;
                }
            }
        }
        Some(Self {
            lower: (1..n).map(|i| a[(i, i - 1)]).collect(),
            diag: (0..n).map(|i| a[(i, i)]).collect(),
            upper: (0..n - 1).map(|i| a[(i, i + 1)]).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let n = self.dim();
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = self.upper[i];
                m[(i + 1, i)] = self.lower[i];
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        Self {
            lower: self.upper.clone(),
            diag: self.diag.clone(),
            upper: self.lower.clone(),
        }
    }

    fn scale(&self) -> T {
        self.diag
            .iter()
            .chain(&self.lower)
            .chain(&self.upper)
            .fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    /// Checks that every elimination pivot stays above `1e-12` relative to the largest entry.
    pub fn check_pivots(&self) -> Result<()> {
        self.solve(&vec![T::zero(); self.dim()]).map(|_| ())
    }

    /// Solves `A·x = b`.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "rhs length {} for tridiagonal of order {n}",
                b.len()
            )));
        }
        let threshold = T::rank_tol() * self.scale();
        let mut c = vec![T::zero(); n];
        let mut d = vec![T::zero(); n];
        let mut pivot = self.diag[0];
        if pivot.abs() <= threshold {
            return Err(Error::SingularCore);
        }
        if n > 1 {
            c[0] = self.upper[0] / pivot;
        }
        d[0] = b[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.lower[i - 1] * c[i - 1];
            if pivot.abs() <= threshold {
                return Err(Error::SingularCore);
            }
            if i + 1 < n {
                c[i] = self.upper[i] / pivot;
            }
            d[i] = (b[i] - self.lower[i - 1] * d[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            let next = d[i + 1];
            d[i] -= c[i] * next;
        }
        Ok(d)
    }

    /// Solves `Aᵀ·x = b`.
    pub fn solve_transpose(&self, b: &[T]) -> Result<Vec<T>> {
        self.transpose().solve(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_dense_multiplication() {
        let t = Tridiagonal::<f64>::new(
            vec![-1.0, -1.0, -1.0],
            vec![2.0, 2.0, 2.0, 2.0],
            vec![-1.0, -1.0, -1.0],
        )
        .unwrap();
        let b = [1.0, 0.0, -2.0, 0.5];
        let x = t.solve(&b).unwrap();
        let ax = t.to_dense().matvec(&x);
        for i in 0..4 {
            assert!((ax[i] - b[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn bidiagonal_transpose_solve() {
        let t =
            Tridiagonal::<f64>::new(vec![0.0, 0.0], vec![0.5, 0.5, 0.5], vec![-0.5, -0.5]).unwrap();
        let b = [1.0, 2.0, 3.0];
        let x = t.solve_transpose(&b).unwrap();
        let atx = t.to_dense().tr_matvec(&x);
        for i in 0..3 {
            assert!((atx[i] - b[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_pivot_detected() {
        let t = Tridiagonal::new(vec![1.0], vec![1.0, 1.0], vec![1.0]).unwrap();
        assert_eq!(t.solve(&[1.0, 1.0]), Err(Error::SingularCore));
    }

    #[test]
    fn from_dense_rejects_wide_band() {
        let mut m = DenseMatrix::<f64>::identity(3);
        m[(0, 2)] = 1.0;
        assert!(Tridiagonal::from_dense(&m).is_none());
        assert!(Tridiagonal::from_dense(&DenseMatrix::<f64>::identity(3)).is_some());
    }
}
