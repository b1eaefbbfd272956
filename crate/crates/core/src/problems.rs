//! Galerkin discretizations of two Fredholm integral equations of the
//! first kind, with orthonormal box functions as test and trial functions,
//! and the calibrated Gaussian noise model.
//!
//! For cells `cᵢ` of width `h` the matrix entries are
//! `Kᵢⱼ = (1/h)·∫_{cᵢ}∫_{cⱼ} k(s,t) dt ds` and the exact coefficients are
//! `x̂ᵢ = h^{-1/2}·∫_{cᵢ} x(t) dt + 1`, i.e. the box-basis coefficients of
//! the solution shifted by the constant vector.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::vector::{norm2, relative_difference};
use crate::linalg::DenseMatrix;
use crate::quadrature::integrate_with_breaks;
use crate::scalar::Scalar;

/// Absolute tolerance for quadrature-computed matrix entries.
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProblemKind {
    Phillips,
    Deriv2,
}

impl ProblemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::Phillips => "phillips",
            ProblemKind::Deriv2 => "deriv2",
        }
    }

    pub fn build<T: Scalar>(self, n: usize) -> Result<TestProblem<T>> {
        match self {
            ProblemKind::Phillips => build_phillips(n),
            ProblemKind::Deriv2 => build_deriv2(n),
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phillips" => Ok(ProblemKind::Phillips),
            "deriv2" => Ok(ProblemKind::Deriv2),
            _ => Err(Error::InvalidConfig(format!(
                "unknown problem `{s}`; valid names: phillips, deriv2"
            ))),
        }
    }
}

/// Noise realization added to the exact data.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseInfo<T> {
    pub nu: T,
    pub seed: u64,
    pub e: Vec<T>,
    /// `‖e‖`, handed to the discrepancy principle.
    pub epsilon: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestProblem<T> {
    pub kind: ProblemKind,
    pub n: usize,
    pub k: DenseMatrix<T>,
    pub x_hat: Vec<T>,
    pub b_hat: Vec<T>,
    /// Observed data; equals `b_hat` until noise is added.
    pub b: Vec<T>,
    pub noise: Option<NoiseInfo<T>>,
}

impl<T: Scalar> TestProblem<T> {
    fn noiseless(kind: ProblemKind, k: DenseMatrix<T>, x_hat: Vec<T>) -> Self {
        let b_hat = k.matvec(&x_hat);
        Self {
            kind,
            n: x_hat.len(),
            k,
            b: b_hat.clone(),
            b_hat,
            x_hat,
            noise: None,
        }
    }

    /// Noise-norm bound `ε` (zero before noise is added).
    pub fn epsilon(&self) -> T {
        self.noise.as_ref().map_or(T::zero(), |n| n.epsilon)
    }
}

fn phillips_solution(s: f64) -> f64 {
    if s.abs() < 3.0 {
        1.0 + (PI * s / 3.0).cos()
    } else {
        0.0
    }
}

fn phillips_solution_antiderivative(s: f64) -> f64 {
    let s = s.clamp(-3.0, 3.0);
    s + 3.0 / PI * (PI * s / 3.0).sin()
}

/// `(1/h)·∫_{-h}^{h} (h−|u|)·x(d+u) du`, which equals the cell-pair integral
/// of the convolution kernel at centre offset `d`.
pub fn phillips_entry(d: f64, h: f64, tol: f64) -> f64 {
    if d.abs() >= 3.0 + h {
        return 0.0;
    }
    let f = |u: f64| (h - u.abs()) * phillips_solution(d + u);
    integrate_with_breaks(f, -h, h, &[0.0, 3.0 - d, -3.0 - d], tol * h) / h
}

/// Phillips' test problem on `[-6, 6]`.
pub fn build_phillips<T: Scalar>(n: usize) -> Result<TestProblem<T>> {
    build_phillips_with_tol(n, DEFAULT_QUADRATURE_TOL)
}

pub fn build_phillips_with_tol<T: Scalar>(n: usize, tol: f64) -> Result<TestProblem<T>> {
    if n < 4 {
        return Err(Error::BadDimension(format!(
            "phillips needs n >= 4, got {n}"
        )));
    }
    let h = 12.0 / n as f64;
    // Toeplitz: entries depend only on |i − j|
    let first_row: Vec<f64> = (0..n)
        .map(|d| phillips_entry(d as f64 * h, h, tol))
        .collect();
    let k = DenseMatrix::from_fn(n, n, |i, j| T::lit(first_row[i.abs_diff(j)]));
    let sqrt_h = h.sqrt();
    let x_hat = (0..n)
        .map(|i| {
            let a = -6.0 + i as f64 * h;
            let cell =
                phillips_solution_antiderivative(a + h) - phillips_solution_antiderivative(a);
            T::lit(cell / sqrt_h + 1.0)
        })
        .collect();
    Ok(TestProblem::noiseless(ProblemKind::Phillips, k, x_hat))
}

/// Green's function of the second derivative on `[0, 1]`.
pub fn deriv2_kernel(s: f64, t: f64) -> f64 {
    if s < t {
        s * (t - 1.0)
    } else {
        t * (s - 1.0)
    }
}

/// Closed-form Galerkin entry for cells `i`, `j` (0-based) of width `h`.
pub fn deriv2_entry(i: usize, j: usize, h: f64) -> f64 {
    let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
    if hi != lo {
        // separable on the cell pair: t(s − 1) with s in the higher cell
        let t_mid = (lo as f64 + 0.5) * h;
        let s_mid = (hi as f64 + 0.5) * h;
        h * t_mid * (s_mid - 1.0)
    } else {
        let a = i as f64 * h;
        (a - 1.0) * (a * h + h * h / 3.0) + 2.0 * a * h * h / 3.0 + h * h * h / 4.0
    }
}

/// The `deriv2` test problem with solution `x(t) = eᵗ`.
pub fn build_deriv2<T: Scalar>(n: usize) -> Result<TestProblem<T>> {
    if n < 4 {
        return Err(Error::BadDimension(format!("deriv2 needs n >= 4, got {n}")));
    }
    let h = 1.0 / n as f64;
    let k = DenseMatrix::from_fn(n, n, |i, j| T::lit(deriv2_entry(i, j, h)));
    let sqrt_h = h.sqrt();
    let x_hat = (0..n)
        .map(|i| {
            let cell = ((i + 1) as f64 * h).exp() - (i as f64 * h).exp();
            T::lit(cell / sqrt_h + 1.0)
        })
        .collect();
    Ok(TestProblem::noiseless(ProblemKind::Deriv2, k, x_hat))
}

/// Adds Gaussian noise scaled to `‖e‖ = ν·‖b̂‖`, drawn from a seeded ChaCha8 stream.
pub fn add_noise<T: Scalar>(problem: &TestProblem<T>, nu: T, seed: u64) -> Result<TestProblem<T>> {
    if !(nu >= T::zero()) || !nu.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "noise level must be a finite non-negative number, got {nu}"
        )));
    }
    let n = problem.b_hat.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let raw_norm = norm2(&raw);
    let target = nu.as_f64() * norm2(&problem.b_hat).as_f64();
    let e: Vec<T> = if target == 0.0 || raw_norm == 0.0 {
        vec![T::zero(); n]
    } else {
        raw.iter()
            .map(|&r| T::lit(r * (target / raw_norm)))
            .collect()
    };
    let b = problem.b_hat.iter().zip(&e).map(|(&x, &y)| x + y).collect();
    let epsilon = norm2(&e);
    let mut out = problem.clone();
    out.b = b;
    out.noise = Some(NoiseInfo {
        nu,
        seed,
        e,
        epsilon,
    });
    Ok(out)
}

/// `‖x_k − x̂‖ / ‖x̂‖`
pub fn relative_error<T: Scalar>(x_k: &[T], x_hat: &[T]) -> Result<T> {
    if x_k.len() != x_hat.len() {
        return Err(Error::ShapeMismatch(format!(
            "vectors of length {} and {}",
            x_k.len(),
            x_hat.len()
        )));
    }
    Ok(relative_difference(x_k, x_hat))
}
