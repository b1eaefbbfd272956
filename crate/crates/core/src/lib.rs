//! Tikhonov regularization matrices obtained from matrix nearness problems.
//!
//! The crate builds square regularization matrices as the closest matrices
//! (in the Frobenius norm) with a prescribed null space, reduces
//! general-form Tikhonov problems with such matrices to standard form, and
//! solves the resulting discrete ill-posed systems by range-restricted
//! GMRES truncated with the discrepancy principle. Two Galerkin test
//! problems and an experiment harness are included.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`.

// `!(x > 0)` style checks are kept because they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod nearness;
pub mod operator;
pub mod problems;
pub mod quadrature;
pub mod regops;
pub mod scalar;
pub mod solver;
pub mod transform;

pub use error::{Error, Result};
pub use linalg::{
    frobenius_inner, frobenius_norm, min_norm_lstsq_solve, solve_upper_triangular, thin_qr,
};
pub use nearness::{
    build_projector, nearest_symmetric_with_nullspace, nearest_two_vector, nearest_with_nullspace,
    nearness_distance,
};
pub use operator::LinearOperator;
pub use regops::{
    compose_regularizer, make_nullspace_basis, make_projector_closed, make_regularization_matrix,
    CompositionMode, NullSpaceKind, RegularizerName,
};
pub use scalar::Scalar;
pub use solver::{rrgmres_solve, StopReason};
pub use transform::Reduction;

/// Dense matrix of `f64`.
pub type Matrix = linalg::DenseMatrix<f64>;
/// Dense matrix of `f32`.
pub type Matrix32 = linalg::DenseMatrix<f32>;
pub type NullSpaceBasis = nearness::NullSpaceBasis<f64>;
pub type ProjectorMatrix = nearness::ProjectorMatrix<f64>;
pub type ProjectedRegularizer = regops::ProjectedRegularizer<f64>;
pub type RegularizerKind = regops::RegularizerKind<f64>;
pub type SolverConfig = solver::SolverConfig<f64>;
pub type IterationLog = solver::IterationLog<f64>;
pub type TestProblem = problems::TestProblem<f64>;
pub type StandardFormContext<'k, K> = transform::StandardFormContext<'k, f64, K>;
