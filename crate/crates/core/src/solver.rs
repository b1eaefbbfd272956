//! Range-restricted GMRES with discrepancy-principle truncation, and a
//! dense Tikhonov oracle.
//!
//! The Krylov space is `span{Ab, A²b, …, Aᵏb}`. Arnoldi started at
//! `v₁ = Ab/‖Ab‖` gives `A·V_k = V_{k+1}·H_k`, so for `z = V_k·y`
//!
//! ```text
//! ‖Az − b‖² = ‖H_k·y − V_{k+1}ᵀb‖² + ‖(I − V_{k+1}V_{k+1}ᵀ)·b‖²
//! ```
//!
//! and the residual norm is available from the small least-squares problem
//! plus the norm of the part of `b` outside the basis, which is tracked as
//! the basis grows. No product `A·z_k` is ever formed.

use std::fmt;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::vector::{axpy, dot, norm2};
use crate::linalg::{Cholesky, DenseMatrix};
use crate::operator::LinearOperator;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig<T> {
    pub eta: T,
    /// Bound on the noise norm `‖e‖`.
    pub epsilon: T,
    pub max_iter: usize,
    /// Arnoldi breakdown threshold relative to `‖A·b‖`.
    pub breakdown_tol: T,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(epsilon: T) -> Self {
        Self {
            eta: T::lit(1.01),
            epsilon,
            max_iter: 100,
            breakdown_tol: T::lit(1e-14),
        }
    }

    pub fn with_eta(mut self, eta: T) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > T::one()) || !self.eta.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "eta must exceed 1, got {}",
                self.eta
            )));
        }
        if !(self.epsilon >= T::zero()) || !self.epsilon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be positive".into()));
        }
        if !(self.breakdown_tol >= T::zero()) {
            return Err(Error::InvalidConfig(
                "breakdown_tol must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// `η·ε`
    pub fn threshold(&self) -> T {
        self.eta * self.epsilon
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StopReason {
    DiscrepancyMet,
    MaxIter,
    Breakdown,
    InitialResidualOk,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::DiscrepancyMet => "DISCREPANCY_MET",
            StopReason::MaxIter => "MAX_ITER",
            StopReason::Breakdown => "BREAKDOWN",
            StopReason::InitialResidualOk => "INITIAL_RESIDUAL_OK",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord<T> {
    pub k: usize,
    /// Projected residual norm `‖A·z_k − b‖`.
    pub residual: T,
    /// Cumulative number of operator applications.
    pub matvecs: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationLog<T> {
    /// One record per `k = 0, …, final_k`.
    pub records: Vec<IterationRecord<T>>,
    pub stop_reason: StopReason,
    pub final_k: usize,
    pub final_z: Vec<T>,
    /// Residual of `final_z` recomputed from the Arnoldi relation.
    pub explicit_residual: T,
}

impl<T: Scalar> IterationLog<T> {
    pub fn matvecs(&self) -> usize {
        self.records.last().map_or(0, |r| r.matvecs)
    }

    pub fn final_residual(&self) -> T {
        self.records.last().map_or(T::zero(), |r| r.residual)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,residual,matvecs\n");
        for r in &self.records {
            let _ = writeln!(out, "{},{:.16e},{}", r.k, r.residual, r.matvecs);
        }
        out
    }
}

fn givens<T: Scalar>(a: T, b: T) -> (T, T) {
    let r = a.hypot(b);
    if r == T::zero() {
        (T::one(), T::zero())
    } else {
        (a / r, b / r)
    }
}

/// Incrementally updated QR factorization of an upper Hessenberg
/// least-squares problem `min ‖H·y − c‖` by Givens rotations.
#[derive(Clone, Debug)]
pub struct GivensLsq<T> {
    /// Rotated columns; column `j` holds `R[0..=j, j]`.
    r_cols: Vec<Vec<T>>,
    rotations: Vec<(T, T)>,
    /// Rotated right-hand side, one entry longer than the number of columns.
    g: Vec<T>,
}

impl<T: Scalar> GivensLsq<T> {
    pub fn new(c1: T) -> Self {
        Self {
            r_cols: Vec::new(),
            rotations: Vec::new(),
            g: vec![c1],
        }
    }

    pub fn len(&self) -> usize {
        self.r_cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_cols.is_empty()
    }

    /// Appends Hessenberg column `h` (length `len() + 2`) together with the
    /// next right-hand-side entry; returns the new projected residual `|g_{k+1}|`.
    pub fn push_column(&mut self, h: &[T], c_next: T) -> T {
        let j = self.len();
        assert_eq!(h.len(), j + 2, "Hessenberg column has wrong length");
        let mut col = h.to_vec();
        for (i, &(c, s)) in self.rotations.iter().enumerate() {
            let (a, b) = (col[i], col[i + 1]);
            col[i] = c * a + s * b;
            col[i + 1] = c * b - s * a;
        }
        let (c, s) = givens(col[j], col[j + 1]);
        col[j] = c * col[j] + s * col[j + 1];
        col.truncate(j + 1);
        self.rotations.push((c, s));
        let gj = self.g[j];
        self.g[j] = c * gj + s * c_next;
        self.g.push(c * c_next - s * gj);
        self.r_cols.push(col);
        self.g[j + 1].abs()
    }

    /// Residual of the current projected problem.
    pub fn residual(&self) -> T {
        self.g.last().map_or(T::zero(), |g| g.abs())
    }

    /// Back substitution for the minimizer. A zero pivot (exactly singular
    /// `H`) contributes a zero component.
    pub fn solve(&self) -> Vec<T> {
        let k = self.len();
        let mut y = vec![T::zero(); k];
        let scale = self
            .r_cols
            .iter()
            .flat_map(|c| c.iter())
            .fold(T::zero(), |m, &x| m.max(x.abs()));
        for i in (0..k).rev() {
            let mut s = self.g[i];
            for (jj, yj) in y.iter().enumerate().skip(i + 1) {
                s -= self.r_cols[jj][i] * *yj;
            }
            let d = self.r_cols[i][i];
            y[i] = if d.abs() <= T::epsilon() * scale || d == T::zero() {
                T::zero()
            } else {
                s / d
            };
        }
        y
    }
}

/// Solves `min ‖β·e₁ − H·y‖` for a `(k+1)×k` upper Hessenberg `H`.
pub fn hessenberg_residual<T: Scalar>(h: &DenseMatrix<T>, beta: T) -> (T, Vec<T>) {
    let k = h.cols();
    assert_eq!(h.rows(), k + 1, "Hessenberg matrix must be (k+1)×k");
    let mut lsq = GivensLsq::new(beta);
    for j in 0..k {
        let col: Vec<T> = (0..j + 2).map(|i| h[(i, j)]).collect();
        lsq.push_column(&col, T::zero());
    }
    (lsq.residual(), lsq.solve())
}

/// State of a range-restricted Arnoldi run, advanced one step at a time.
pub struct Rrgmres<'a, T: Scalar, A: LinearOperator<T> + ?Sized> {
    a: &'a A,
    b: Vec<T>,
    /// Orthonormal basis `v₁, …, v_{k+1}` (only `v₁..v_k` after breakdown).
    basis: Vec<Vec<T>>,
    /// Hessenberg columns, column `j` of length `j + 2`.
    h_cols: Vec<Vec<T>>,
    /// `b` minus its projection on the basis.
    b_perp: Vec<T>,
    lsq: GivensLsq<T>,
    beta: T,
    breakdown_tol: T,
    matvecs: usize,
    broken_down: bool,
}

impl<'a, T: Scalar, A: LinearOperator<T> + ?Sized> Rrgmres<'a, T, A> {
    /// Forms `A·b` (one application). A vanishing `A·b` leaves the run in the
    /// broken-down state with `k = 0`.
    pub fn start(a: &'a A, b: &[T], breakdown_tol: T) -> Result<Self> {
        let n = a.ncols();
        if a.nrows() != n {
            return Err(Error::ShapeMismatch(format!(
                "RRGMRES needs a square operator, got {}×{n}",
                a.nrows()
            )));
        }
        if b.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "right-hand side has length {}, operator order {n}",
                b.len()
            )));
        }
        if b.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let ab = a.apply(b);
        if ab.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let beta = norm2(&ab);
        let mut state = Self {
            a,
            b: b.to_vec(),
            basis: Vec::new(),
            h_cols: Vec::new(),
            b_perp: b.to_vec(),
            lsq: GivensLsq::new(T::zero()),
            beta,
            breakdown_tol,
            matvecs: 1,
            broken_down: false,
        };
        let bnorm = norm2(b);
        if beta == T::zero() || beta <= T::epsilon() * bnorm * T::lit(n as f64) {
            state.broken_down = true;
            return Ok(state);
        }
        let v1: Vec<T> = ab.iter().map(|&x| x / beta).collect();
        let c1 = state.absorb(&v1);
        state.lsq = GivensLsq::new(c1);
        state.basis.push(v1);
        Ok(state)
    }

    fn absorb(&mut self, v: &[T]) -> T {
        let c = dot(v, &self.b_perp);
        axpy(-c, v, &mut self.b_perp);
        c
    }

    /// Current iteration index `k`.
    pub fn k(&self) -> usize {
        self.lsq.len()
    }

    pub fn matvecs(&self) -> usize {
        self.matvecs
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn is_broken_down(&self) -> bool {
        self.broken_down
    }

    /// Orthonormal Krylov basis vectors computed so far.
    pub fn basis(&self) -> &[Vec<T>] {
        &self.basis
    }

    /// The `(k+1)×k` Hessenberg matrix (`k×k` rows used after breakdown).
    pub fn hessenberg(&self) -> DenseMatrix<T> {
        let k = self.k();
        DenseMatrix::from_fn(k + 1, k, |i, j| {
            self.h_cols[j].get(i).copied().unwrap_or(T::zero())
        })
    }

    /// Projected residual `‖A·z_k − b‖`.
    pub fn residual(&self) -> T {
        let g = self.lsq.residual();
        g.hypot(norm2(&self.b_perp))
    }

    fn coefficients(&self) -> Vec<T> {
        self.lsq.solve()
    }

    /// `z_k = V_k·y_k`
    pub fn iterate(&self) -> Vec<T> {
        let y = self.coefficients();
        let mut z = vec![T::zero(); self.b.len()];
        for (v, &yj) in self.basis.iter().zip(&y) {
            axpy(yj, v, &mut z);
        }
        z
    }

    /// `‖A·z_k − b‖` recomputed as `‖V_{k+1}·H_k·y_k − b‖`, without applying `A`.
    pub fn explicit_residual(&self) -> T {
        let y = self.coefficients();
        let mut r: Vec<T> = self.b.iter().map(|&x| -x).collect();
        for (j, &yj) in y.iter().enumerate() {
            for (i, &hij) in self.h_cols[j].iter().enumerate() {
                if let Some(v) = self.basis.get(i) {
                    axpy(yj * hij, v, &mut r);
                }
            }
        }
        norm2(&r)
    }

    /// One Arnoldi step (one application of the operator). Returns `false`
    /// on breakdown, i.e. when the Krylov space has become invariant.
    pub fn step(&mut self) -> Result<bool> {
        if self.broken_down {
            return Ok(false);
        }
        let j = self.k();
        let mut w = self.a.apply(&self.basis[j]);
        self.matvecs += 1;
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut h = vec![T::zero(); j + 2];
        // modified Gram–Schmidt followed by one reorthogonalization sweep
        for _ in 0..2 {
            for (i, v) in self.basis.iter().enumerate() {
                let c = dot(v, &w);
                h[i] += c;
                axpy(-c, v, &mut w);
            }
        }
        let hnext = norm2(&w);
        let genuine = hnext <= self.breakdown_tol * self.beta;
        // after n steps the basis spans the whole space and the remainder is rounding
        if genuine || j + 1 >= self.b.len() {
            self.broken_down = true;
            h[j + 1] = T::zero();
            self.lsq.push_column(&h, T::zero());
            self.h_cols.push(h);
            return Ok(!genuine);
        }
        h[j + 1] = hnext;
        let v: Vec<T> = w.iter().map(|&x| x / hnext).collect();
        let c = self.absorb(&v);
        self.basis.push(v);
        self.lsq.push_column(&h, c);
        self.h_cols.push(h);
        Ok(true)
    }
}

/// Truncated RRGMRES on `A·z = b` stopped by the discrepancy principle.
///
/// The initial product `A·b` is formed before the `k = 0` test, so a run
/// stopping at iteration `k` always costs `k + 1` applications.
pub fn rrgmres_solve<T: Scalar, A: LinearOperator<T> + ?Sized>(
    a: &A,
    b: &[T],
    cfg: &SolverConfig<T>,
) -> Result<IterationLog<T>> {
    cfg.validate()?;
    let mut run = Rrgmres::start(a, b, cfg.breakdown_tol)?;
    let threshold = cfg.threshold();
    let r0 = norm2(b);
    let mut records = vec![IterationRecord {
        k: 0,
        residual: r0,
        matvecs: run.matvecs(),
    }];
    let finish = |run: &Rrgmres<'_, T, A>, records, stop_reason| IterationLog {
        records,
        stop_reason,
        final_k: run.k(),
        final_z: run.iterate(),
        explicit_residual: run.explicit_residual(),
    };
    if r0 <= threshold {
        return Ok(finish(&run, records, StopReason::InitialResidualOk));
    }
    if run.is_broken_down() {
        return Ok(finish(&run, records, StopReason::Breakdown));
    }
    let max_iter = cfg.max_iter.min(b.len());
    loop {
        let extended = run.step()?;
        let residual = run.residual();
        records.push(IterationRecord {
            k: run.k(),
            residual,
            matvecs: run.matvecs(),
        });
        if residual <= threshold {
            return Ok(finish(&run, records, StopReason::DiscrepancyMet));
        }
        if !extended {
            return Ok(finish(&run, records, StopReason::Breakdown));
        }
        if run.k() >= max_iter {
            return Ok(finish(&run, records, StopReason::MaxIter));
        }
    }
}

/// `(KᵀK + μLᵀL)⁻¹·Kᵀb` by a dense Cholesky factorization.
pub fn tikhonov_direct_oracle<T: Scalar>(
    k: &DenseMatrix<T>,
    l: &DenseMatrix<T>,
    b: &[T],
    mu: T,
) -> Result<Vec<T>> {
    if k.cols() != l.cols() {
        return Err(Error::ShapeMismatch(format!(
            "K has {} columns, L has {}",
            k.cols(),
            l.cols()
        )));
    }
    if b.len() != k.rows() {
        return Err(Error::ShapeMismatch(format!(
            "b has length {}, K has {} rows",
            b.len(),
            k.rows()
        )));
    }
    if !(mu > T::zero()) {
        return Err(Error::InvalidConfig(format!(
            "mu must be positive, got {mu}"
        )));
    }
    let mut m = k.tr_matmul(k);
    let ltl = l.tr_matmul(l);
    let n = m.rows();
    for i in 0..n {
        for (x, &y) in m.row_mut(i).iter_mut().zip(ltl.row(i)) {
            *x += mu * y;
        }
    }
    Cholesky::new(&m)?.solve(&k.tr_matvec(b))
}

fn tikhonov_residual<T: Scalar>(
    k: &DenseMatrix<T>,
    l: &DenseMatrix<T>,
    b: &[T],
    mu: T,
) -> Result<(T, Vec<T>)> {
    let x = tikhonov_direct_oracle(k, l, b, mu)?;
    let kx = k.matvec(&x);
    let r: Vec<T> = kx.iter().zip(b).map(|(&p, &q)| p - q).collect();
    Ok((norm2(&r), x))
}

/// Finds `μ` with `‖K·x_μ − b‖ = η·ε` by bisection on `log μ`.
///
/// The search covers `μ·s ∈ [1e-14, 1e14]` with `s = ‖K‖²_F/‖L‖²_F`, and
/// stops when the bracket is relatively narrower than `1e-8`.
pub fn discrepancy_mu_solve<T: Scalar>(
    k: &DenseMatrix<T>,
    l: &DenseMatrix<T>,
    b: &[T],
    epsilon: T,
    eta: T,
) -> Result<(T, Vec<T>)> {
    let target = eta * epsilon;
    let lnorm = l.frobenius_norm();
    if lnorm == T::zero() {
        return Err(Error::NoRoot(
            "the residual does not depend on mu when L = 0".into(),
        ));
    }
    let scale = (k.frobenius_norm() / lnorm).powi(2);
    let mut lo = (T::lit(-14.0) * T::lit(10f64.ln())).exp() * scale;
    let mut hi = (T::lit(14.0) * T::lit(10f64.ln())).exp() * scale;
    let (r_lo, x_lo) = tikhonov_residual(k, l, b, lo)?;
    let (r_hi, _) = tikhonov_residual(k, l, b, hi)?;
    if target < r_lo {
        return Err(Error::NoRoot(format!(
            "target {target:e} below the smallest attainable residual {r_lo:e}"
        )));
    }
    if target > r_hi {
        return Err(Error::NoRoot(format!(
            "target {target:e} above the largest attainable residual {r_hi:e}"
        )));
    }
    if target == r_lo {
        return Ok((lo, x_lo));
    }
    let tol = T::tol(1e-8);
    while hi / lo - T::one() > tol {
        let mid = (lo * hi).sqrt();
        let (r, _) = tikhonov_residual(k, l, b, mid)?;
        if r < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = (lo * hi).sqrt();
    let x = tikhonov_direct_oracle(k, l, b, mu)?;
    Ok((mu, x))
}
