//! Closest matrices in the Frobenius norm with a prescribed null space.
//!
//! For `V` with orthonormal columns spanning the subspace that must be
//! annihilated, the nearest matrix to `A` whose null space contains
//! `range(V)` is `A·(I − VVᵀ)`, and among symmetric matrices the nearest
//! one is `(I − VVᵀ)·A·(I − VVᵀ)`. Both distances have closed forms.
//! Non-orthonormal spanning sets are handled either by orthonormalizing
//! them or through the projector `I − V(VᵀV)⁻¹Vᵀ`; the two-vector case
//! also has an explicit entrywise formula that is kept as a separate
//! code path for cross-validation.

use crate::error::{Error, Result};
use crate::linalg::vector::dot;
use crate::linalg::{thin_qr, Cholesky, DenseMatrix};
use crate::scalar::Scalar;

/// Orthonormal basis of a prescribed null space, `n×ℓ` with `0 ≤ ℓ < n`.
#[derive(Clone, Debug, PartialEq)]
pub struct NullSpaceBasis<T> {
    v: DenseMatrix<T>,
    raw: Option<DenseMatrix<T>>,
}

impl<T: Scalar> NullSpaceBasis<T> {
    /// The trivial constraint (`ℓ = 0`).
    pub fn empty(n: usize) -> Self {
        Self {
            v: DenseMatrix::zeros(n, 0),
            raw: None,
        }
    }

    /// Wraps columns that are already orthonormal (checked to `1e-12` entrywise).
    pub fn from_orthonormal(v: DenseMatrix<T>) -> Result<Self> {
        Self::check_dims(&v)?;
        let gram = v.tr_matmul(&v);
        let dev = gram.max_abs_diff(&DenseMatrix::identity(v.cols()));
        if dev > T::tol(1e-12) {
            return Err(Error::InvalidConfig(format!(
                "basis columns are not orthonormal (max |VᵀV − I| = {:e})",
                dev.as_f64()
            )));
        }
        Ok(Self { v, raw: None })
    }

    /// Orthonormalizes arbitrary spanning vectors (the columns of `raw`) via thin QR.
    pub fn from_spanning(raw: DenseMatrix<T>) -> Result<Self> {
        Self::check_dims(&raw)?;
        if raw.cols() == 0 {
            return Ok(Self::empty(raw.rows()));
        }
        let (q, _) = thin_qr(&raw)?;
        Ok(Self {
            v: q,
            raw: Some(raw),
        })
    }

    fn check_dims(v: &DenseMatrix<T>) -> Result<()> {
        if v.rows() == 0 || v.cols() >= v.rows() {
            return Err(Error::BadDimension(format!(
                "null-space basis must be n x l with 0 <= l < n, got {}x{}",
                v.rows(),
                v.cols()
            )));
        }
        if !v.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.v.rows()
    }

    pub fn ell(&self) -> usize {
        self.v.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.ell() == 0
    }

    /// Orthonormal columns.
    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.v
    }

    /// User-supplied spanning vectors, when the basis was built from them.
    pub fn raw(&self) -> Option<&DenseMatrix<T>> {
        self.raw.as_ref()
    }

    /// `(I − VVᵀ)·w`
    pub fn project_out(&self, w: &[T]) -> Vec<T> {
        let c = self.v.tr_matvec(w);
        let vc = self.v.matvec(&c);
        w.iter().zip(vc).map(|(&a, b)| a - b).collect()
    }
}

/// Orthogonal projector onto the complement of a null space.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorMatrix<T> {
    p: DenseMatrix<T>,
}

impl<T: Scalar> ProjectorMatrix<T> {
    /// Wraps an explicit projector. Symmetry and idempotence are not re-checked.
    pub fn from_matrix_unchecked(p: DenseMatrix<T>) -> Self {
        Self { p }
    }

    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.p
    }

    pub fn into_matrix(self) -> DenseMatrix<T> {
        self.p
    }

    pub fn n(&self) -> usize {
        self.p.rows()
    }
}

/// `P = I − V·Ω⁻¹·Vᵀ` with `Ω = VᵀV`; `I − VVᵀ` when `orthonormal` is set.
///
/// An `n×0` matrix `V` yields `P = I`.
pub fn build_projector<T: Scalar>(
    v: &DenseMatrix<T>,
    orthonormal: bool,
) -> Result<ProjectorMatrix<T>> {
    let n = v.rows();
    let ell = v.cols();
    if ell > n {
        return Err(Error::BadDimension(format!(
            "{ell} null-space vectors in dimension {n}"
        )));
    }
    let mut p = DenseMatrix::identity(n);
    if ell == 0 {
        return Ok(ProjectorMatrix { p });
    }
    // W = V·Ω⁻¹ so that P = I − W·Vᵀ
    let w = if orthonormal {
        v.clone()
    } else {
        let omega = v.tr_matmul(v);
        let chol = Cholesky::new(&omega).map_err(|_| Error::RankDeficient {
            index: 0,
            pivot: 0.0,
        })?;
        let mut w = DenseMatrix::zeros(n, ell);
        for i in 0..n {
            let row = chol.solve(v.row(i))?;
            w.row_mut(i).copy_from_slice(&row);
        }
        w
    };
    for i in 0..n {
        for j in 0..n {
            p[(i, j)] -= dot(w.row(i), v.row(j));
        }
    }
    // symmetric by construction; remove rounding asymmetry
    for i in 0..n {
        for j in i + 1..n {
            let s = (p[(i, j)] + p[(j, i)]) * T::lit(0.5);
            p[(i, j)] = s;
            p[(j, i)] = s;
        }
    }
    Ok(ProjectorMatrix { p })
}

fn check_cols<T: Scalar>(a: &DenseMatrix<T>, n: usize) -> Result<()> {
    if a.cols() != n {
        return Err(Error::ShapeMismatch(format!(
            "matrix has {} columns, null space lives in R^{n}",
            a.cols()
        )));
    }
    Ok(())
}

/// `A·V` followed by `(A·V)·Vᵀ`, the part of `A` acting on the null space.
fn null_part<T: Scalar>(a: &DenseMatrix<T>, v: &DenseMatrix<T>) -> DenseMatrix<T> {
    a.matmul(v).matmul(&v.transpose())
}

/// `Â = A·(I − VVᵀ)`, the Frobenius-nearest matrix with `Â·V = 0`.
pub fn nearest_with_nullspace<T: Scalar>(
    a: &DenseMatrix<T>,
    basis: &NullSpaceBasis<T>,
) -> Result<DenseMatrix<T>> {
    check_cols(a, basis.n())?;
    if basis.is_empty() {
        return Ok(a.clone());
    }
    Ok(a - &null_part(a, basis.matrix()))
}

/// `A·(I − C)` with `C` the projector onto `span{v1, v2}` written out entrywise.
pub fn nearest_two_vector<T: Scalar>(
    a: &DenseMatrix<T>,
    v1: &[T],
    v2: &[T],
) -> Result<DenseMatrix<T>> {
    let n = v1.len();
    if v2.len() != n {
        return Err(Error::ShapeMismatch(
            "null-space vectors of different lengths".into(),
        ));
    }
    check_cols(a, n)?;
    let s11 = dot(v1, v1);
    let s22 = dot(v2, v2);
    let s12 = dot(v1, v2);
    let gram_det = s11 * s22 - s12 * s12;
    if !(gram_det > T::rank_tol() * s11 * s22) {
        return Err(Error::DependentVectors);
    }
    let c = DenseMatrix::from_fn(n, n, |i, j| {
        (s11 * v2[i] * v2[j] - (v2[i] * v1[j] + v1[i] * v2[j]) * s12 + s22 * v1[i] * v1[j])
            / gram_det
    });
    Ok(a - &a.matmul(&c))
}

/// `Â = (I − VVᵀ)·A·(I − VVᵀ)` for symmetric `A`.
pub fn nearest_symmetric_with_nullspace<T: Scalar>(
    a: &DenseMatrix<T>,
    basis: &NullSpaceBasis<T>,
) -> Result<DenseMatrix<T>> {
    check_symmetric(a)?;
    check_cols(a, basis.n())?;
    if basis.is_empty() {
        return Ok(a.clone());
    }
    let v = basis.matrix();
    let right = a - &null_part(a, v);
    // (I − VVᵀ)·X = X − V·(VᵀX)
    let left = &right - &v.matmul(&v.tr_matmul(&right));
    let n = a.rows();
    Ok(DenseMatrix::from_fn(n, n, |i, j| {
        (left[(i, j)] + left[(j, i)]) * T::lit(0.5)
    }))
}

fn check_symmetric<T: Scalar>(a: &DenseMatrix<T>) -> Result<()> {
    let asym = a
        .asymmetry()
        .ok_or_else(|| Error::ShapeMismatch("symmetric nearness needs a square matrix".into()))?;
    let scale = a.frobenius_norm();
    if asym > T::rank_tol() * scale {
        let rel = if scale > T::zero() {
            (asym / scale).as_f64()
        } else {
            f64::INFINITY
        };
        return Err(Error::NotSymmetric(rel));
    }
    Ok(())
}

/// Distance from `A` to its nearest matrix in the constraint class, by the
/// closed forms `‖AVVᵀ‖_F` and `‖VVᵀAVVᵀ − VVᵀA − AVVᵀ‖_F`.
pub fn nearness_distance<T: Scalar>(
    a: &DenseMatrix<T>,
    basis: &NullSpaceBasis<T>,
    symmetric: bool,
) -> Result<T> {
    check_cols(a, basis.n())?;
    if symmetric {
        check_symmetric(a)?;
    }
    if basis.is_empty() {
        return Ok(T::zero());
    }
    let v = basis.matrix();
    let avvt = null_part(a, v);
    if !symmetric {
        return Ok(avvt.frobenius_norm());
    }
    let vvta = v.matmul(&v.tr_matmul(a));
    let vvtavvt = v.matmul(&v.tr_matmul(&avvt));
    Ok((&(&vvtavvt - &vvta) - &avvt).frobenius_norm())
}
