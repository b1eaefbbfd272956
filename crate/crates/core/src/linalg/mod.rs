//! Dense linear algebra kernels: matrices, Householder QR, triangular,
//! Cholesky, minimal-norm least squares and tridiagonal solves.

mod cholesky;
mod matrix;
mod qr;
mod triangular;
mod tridiagonal;
pub mod vector;

pub use cholesky::Cholesky;
pub use matrix::{frobenius_inner, frobenius_norm, DenseMatrix};
pub use qr::{
    min_norm_lstsq_solve, thin_qr, thin_qr_scaled, CompleteOrthogonal, HouseholderQr, QrSolver,
};
pub use triangular::{solve_lower_triangular, solve_upper_triangular};
pub use tridiagonal::Tridiagonal;
