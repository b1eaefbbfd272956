use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::matrix::DenseMatrix;
use super::triangular::{solve_lower_triangular, solve_upper_triangular};

/// Cholesky factor `A = G·Gᵀ` of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    g: DenseMatrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Fails with `SingularSystem` when a pivot drops below `1e-12·max|A_ii|`.
    pub fn new(a: &DenseMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::ShapeMismatch(
                "Cholesky needs a square matrix".into(),
            ));
        }
        let n = a.rows();
        let dmax = (0..n).fold(T::zero(), |m, i| m.max(a[(i, i)].abs()));
        let threshold = T::rank_tol() * dmax;
        let mut g = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= g[(j, k)] * g[(j, k)];
            }
            if !(d > threshold) {
                return Err(Error::SingularSystem);
            }
            let djj = d.sqrt();
            g[(j, j)] = djj;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= g[(i, k)] * g[(j, k)];
                }
                g[(i, j)] = s / djj;
            }
        }
        Ok(Self { g })
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let y = solve_lower_triangular(&self.g, b)?;
        solve_upper_triangular(&self.g.transpose(), &y)
    }

    pub fn factor(&self) -> &DenseMatrix<T> {
        &self.g
    }
}
