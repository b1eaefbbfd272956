//! Reduction of general-form Tikhonov problems
//! `min ‖Kx − b‖² + μ‖Lx‖²` to standard form `min ‖K₂z − b₁‖² + μ‖z‖²`.
//!
//! With `V` an orthonormal basis of `null(L)` and `K·V = Q·R`, the
//! null-space component is fitted exactly, `x⁽⁰⁾ = V·R⁻¹·Qᵀ·b`, which
//! leaves `b₁ = b − QQᵀb` and the projected inverse
//! `P_K† = I − V·R⁻¹·Qᵀ·K` with `K·P_K† = (I − QQᵀ)·K`. The remaining
//! factor of `L` is absorbed in one of two ways.
//!
//! [`Reduction::Substitution`] substitutes `z = L̃y`, so `K₂ = (I − QQᵀ)·K·L̃⁻¹`
//! and `x = P_K†·L̃⁻¹·z + x⁽⁰⁾`. For `L = PL̃P` the projector left of `L̃`
//! is removed by a second null-space split of that operator with the same
//! basis `V`, which costs another `ℓ` products with `K`. Because the
//! `V`-component of `y` is not penalized by `‖L̃y‖`, the problem solved is
//! the general-form problem for `L' = (I − Π)·C·P` with `C = L̃` or `PL̃`
//! and `Π` the orthogonal projector onto `range(C·V)` (see
//! [`substitution_equivalent_matrix`]). `L'` has the same null space as `L`.
//!
//! [`Reduction::Pseudoinverse`] uses the Moore–Penrose inverse of `L` and
//! reproduces the general-form minimizer for `L` itself:
//!
//! * `L = L̃P`:  `L† = L̃⁻¹·(I − UUᵀ)`, `U` orthonormal with `range(U) = range(L̃⁻ᵀV)`.
//! * `L = PL̃P`: `L† = L̃⁻¹·(I − V·G⁻¹·Vᵀ·L̃⁻¹)·P`, `G = Vᵀ·L̃⁻¹·V`.
//!
//! A square singular `L` is handled by a complete orthogonal decomposition
//! in both reductions, which then coincide. Only `L̃` solves and products
//! with `K` are performed; `K₂` is never formed.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::linalg::vector::{add, sub};
use crate::linalg::{
    solve_upper_triangular, thin_qr, thin_qr_scaled, CompleteOrthogonal, DenseMatrix, QrSolver,
};
use crate::nearness::NullSpaceBasis;
use crate::operator::LinearOperator;
use crate::regops::{CompositionMode, CoreSolver, ProjectedRegularizer};
use crate::scalar::Scalar;

/// How the non-null-space factor of `L` is absorbed into `K₂`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Reduction {
    /// `z = L̃y` with a nested split for two-sided projections.
    #[default]
    Substitution,
    /// `z = L·x` through the Moore–Penrose inverse of `L`.
    Pseudoinverse,
}

#[derive(Clone, Debug)]
enum CoreMap<T> {
    Identity,
    Solve(CoreSolver<T>),
    RightPinv {
        solver: CoreSolver<T>,
        u: DenseMatrix<T>,
    },
    TwoSidedPinv {
        solver: CoreSolver<T>,
        linv_v: DenseMatrix<T>,
        gram: QrSolver<T>,
    },
    Plain(CompleteOrthogonal<T>),
}

/// Exact fit of data on `range(A·V)` for an operator `A`: `A·V = Q·R`.
#[derive(Clone, Debug)]
struct NullSplit<T> {
    q: DenseMatrix<T>,
    r: DenseMatrix<T>,
    /// `V·R⁻¹·Qᵀ·data`
    offset: Vec<T>,
}

impl<T: Scalar> NullSplit<T> {
    /// Returns the split and the reduced data `(I − QQᵀ)·data`.
    fn new(
        av: &DenseMatrix<T>,
        v: &DenseMatrix<T>,
        data: &[T],
        scale: T,
    ) -> Result<(Self, Vec<T>)> {
        let (q, r) = thin_qr_scaled(av, scale)?;
        let qtb = q.tr_matvec(data);
        let offset = v.matvec(&solve_upper_triangular(&r, &qtb)?);
        // A·offset = Q·Qᵀ·data, no extra product
        let reduced = sub(data, &q.matvec(&qtb));
        Ok((Self { q, r, offset }, reduced))
    }

    fn project_out(&self, y: &mut [T]) {
        let c = self.q.tr_matvec(y);
        let qc = self.q.matvec(&c);
        y.iter_mut().zip(qc).for_each(|(a, b)| *a -= b);
    }

    /// `w − V·R⁻¹·Qᵀ·(A·w)` given `aw = A·w`.
    fn pseudo_project(&self, v: &DenseMatrix<T>, w: &[T], aw: &[T]) -> Result<Vec<T>> {
        let coef = solve_upper_triangular(&self.r, &self.q.tr_matvec(aw))?;
        Ok(sub(w, &v.matvec(&coef)))
    }
}

/// Everything needed to run a standard-form solver on `K₂z = b₁` and map
/// its iterates back. Holds a borrowed `K` and counts every product with it.
pub struct StandardFormContext<'k, T: Scalar, K: LinearOperator<T> + ?Sized> {
    k: &'k K,
    basis: NullSpaceBasis<T>,
    outer: Option<NullSplit<T>>,
    /// Second split of `(I − QQᵀ)·K·L̃⁻¹` for two-sided substitution.
    inner: Option<NullSplit<T>>,
    core: CoreMap<T>,
    x0: Vec<T>,
    rhs: Vec<T>,
    mode: CompositionMode,
    reduction: Reduction,
    matvecs: AtomicUsize,
}

impl<'k, T: Scalar, K: LinearOperator<T> + ?Sized> StandardFormContext<'k, T, K> {
    /// [`Self::prepare_with`] using [`Reduction::Substitution`].
    pub fn prepare(k: &'k K, b: &[T], reg: &ProjectedRegularizer<T>) -> Result<Self> {
        Self::prepare_with(k, b, reg, Reduction::default())
    }

    /// Splits off the null-space component and prepares the core map.
    ///
    /// Costs `ℓ` products with `K`, or `2ℓ` for two-sided substitution.
    /// Fails with `RankDeficient` when `null(K) ∩ null(L) ≠ {0}` is
    /// detected through a singular `R`.
    pub fn prepare_with(
        k: &'k K,
        b: &[T],
        reg: &ProjectedRegularizer<T>,
        reduction: Reduction,
    ) -> Result<Self> {
        let n = reg.n();
        if k.ncols() != n {
            return Err(Error::ShapeMismatch(format!(
                "K has {} columns, regularizer order {n}",
                k.ncols()
            )));
        }
        if b.len() != k.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "b has length {}, K has {} rows",
                b.len(),
                k.nrows()
            )));
        }
        if b.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut ctx = Self {
            k,
            basis: reg.basis().clone(),
            outer: None,
            inner: None,
            core: build_core_map(reg, reduction)?,
            x0: vec![T::zero(); n],
            rhs: b.to_vec(),
            mode: reg.mode(),
            reduction,
            matvecs: AtomicUsize::new(0),
        };
        let ell = ctx.basis.ell();
        if ell == 0 {
            return Ok(ctx);
        }
        let scale = k.norm_estimate().unwrap_or(T::zero());
        let v = ctx.basis.matrix().clone();
        let mut kv = DenseMatrix::zeros(k.nrows(), ell);
        for j in 0..ell {
            kv.set_column(j, &ctx.k_apply(&v.column(j)));
        }
        let (outer, b1) = NullSplit::new(&kv, &v, b, scale)?;
        ctx.x0 = outer.offset.clone();
        ctx.rhs = b1;
        ctx.outer = Some(outer);
        if reduction == Reduction::Substitution && ctx.mode == CompositionMode::TwoSided {
            let mut av = DenseMatrix::zeros(k.nrows(), ell);
            for j in 0..ell {
                av.set_column(j, &ctx.apply_reduced(&v.column(j))?);
            }
            let (inner, b2) = NullSplit::new(&av, &v, &ctx.rhs, scale)?;
            ctx.rhs = b2;
            ctx.inner = Some(inner);
        }
        Ok(ctx)
    }

    fn k_apply(&self, x: &[T]) -> Vec<T> {
        self.matvecs.fetch_add(1, Ordering::Relaxed);
        self.k.apply(x)
    }

    /// Number of products with `K` so far.
    pub fn matvec_count(&self) -> usize {
        self.matvecs.load(Ordering::Relaxed)
    }

    pub fn mode(&self) -> CompositionMode {
        self.mode
    }

    pub fn reduction(&self) -> Reduction {
        self.reduction
    }

    pub fn ell(&self) -> usize {
        self.basis.ell()
    }

    /// True when a second null-space split was made.
    pub fn is_nested(&self) -> bool {
        self.inner.is_some()
    }

    pub fn basis(&self) -> &NullSpaceBasis<T> {
        &self.basis
    }

    /// Exact-fit null-space component `x⁽⁰⁾`.
    pub fn x0(&self) -> &[T] {
        &self.x0
    }

    /// Right-hand side of the standard-form system, `b₁ = b − K·x⁽⁰⁾`
    /// (further reduced by the nested split when there is one).
    pub fn b1(&self) -> &[T] {
        &self.rhs
    }

    /// `Q` of `K·V = Q·R` (`m×0` when `ℓ = 0`).
    pub fn q(&self) -> DenseMatrix<T> {
        self.outer
            .as_ref()
            .map_or_else(|| DenseMatrix::zeros(self.k.nrows(), 0), |s| s.q.clone())
    }

    /// `R` of `K·V = Q·R`.
    pub fn r(&self) -> DenseMatrix<T> {
        self.outer
            .as_ref()
            .map_or_else(|| DenseMatrix::zeros(0, 0), |s| s.r.clone())
    }

    /// `P_K†·w = w − V·R⁻¹·Qᵀ·(K·w)`; one product with `K` unless `ℓ = 0`.
    pub fn apply_pk_dagger(&self, w: &[T]) -> Result<Vec<T>> {
        match &self.outer {
            None => Ok(w.to_vec()),
            Some(split) => split.pseudo_project(self.basis.matrix(), w, &self.k_apply(w)),
        }
    }

    /// The map `z ↦ y` absorbing the non-null-space factor of `L`
    /// (`L̃⁻¹`, or `L†` for the pseudoinverse reduction).
    pub fn apply_core_map(&self, z: &[T]) -> Result<Vec<T>> {
        match &self.core {
            CoreMap::Identity => Ok(z.to_vec()),
            CoreMap::Solve(solver) => solver.solve(z),
            CoreMap::RightPinv { solver, u } => {
                let c = u.tr_matvec(z);
                solver.solve(&sub(z, &u.matvec(&c)))
            }
            CoreMap::TwoSidedPinv {
                solver,
                linv_v,
                gram,
            } => {
                let p = self.basis.project_out(z);
                let t = solver.solve(&p)?;
                let rhs = self.basis.matrix().tr_matvec(&t);
                let c = gram.solve(&rhs).map_err(|_| Error::SingularCore)?;
                Ok(sub(&t, &linv_v.matvec(&c)))
            }
            CoreMap::Plain(cod) => cod.solve(z),
        }
    }

    /// `(I − QQᵀ)·K·M·z` with `M` the core map; one product with `K`.
    fn apply_reduced(&self, z: &[T]) -> Result<Vec<T>> {
        let y = self.apply_core_map(z)?;
        let mut out = self.k_apply(&y);
        if let Some(split) = &self.outer {
            split.project_out(&mut out);
        }
        Ok(out)
    }

    /// `K₂·z` without forming `K₂`; one product with `K`.
    pub fn apply_k2(&self, z: &[T]) -> Result<Vec<T>> {
        let mut out = self.apply_reduced(z)?;
        if let Some(inner) = &self.inner {
            inner.project_out(&mut out);
        }
        Ok(out)
    }

    /// Maps a standard-form iterate back to `x`; one product with `K`
    /// per null-space split.
    pub fn back_transform(&self, z: &[T]) -> Result<Vec<T>> {
        let z = match &self.inner {
            None => z.to_vec(),
            Some(inner) => {
                let az = self.apply_reduced(z)?;
                add(
                    &inner.pseudo_project(self.basis.matrix(), z, &az)?,
                    &inner.offset,
                )
            }
        };
        let y = self.apply_core_map(&z)?;
        Ok(add(&self.apply_pk_dagger(&y)?, &self.x0))
    }
}

impl<T: Scalar, K: LinearOperator<T> + ?Sized> LinearOperator<T> for StandardFormContext<'_, T, K> {
    fn nrows(&self) -> usize {
        self.k.nrows()
    }

    fn ncols(&self) -> usize {
        self.basis.n()
    }

    fn apply(&self, z: &[T]) -> Vec<T> {
        self.apply_k2(z)
            .expect("core pivots are validated when the context is prepared")
    }
}

fn build_core_map<T: Scalar>(
    reg: &ProjectedRegularizer<T>,
    reduction: Reduction,
) -> Result<CoreMap<T>> {
    let basis = reg.basis();
    let v = basis.matrix();
    let n = reg.n();
    let ell = basis.ell();
    let core = || reg.core().ok_or(Error::SingularCore);
    match (reg.mode(), reduction) {
        (CompositionMode::Identity, _) => Ok(CoreMap::Identity),
        (CompositionMode::Plain, _) => Ok(CoreMap::Plain(CompleteOrthogonal::new(core()?)?)),
        (CompositionMode::Right | CompositionMode::TwoSided, Reduction::Substitution) => {
            Ok(CoreMap::Solve(CoreSolver::new(core()?)?))
        }
        (CompositionMode::Right, Reduction::Pseudoinverse) => {
            let solver = CoreSolver::new(core()?)?;
            let u = if ell == 0 {
                DenseMatrix::zeros(n, 0)
            } else {
                let mut raw = DenseMatrix::zeros(n, ell);
                for j in 0..ell {
                    raw.set_column(j, &solver.solve_transpose(&v.column(j))?);
                }
                thin_qr(&raw).map_err(|_| Error::SingularCore)?.0
            };
            Ok(CoreMap::RightPinv { solver, u })
        }
        (CompositionMode::TwoSided, Reduction::Pseudoinverse) => {
            let solver = CoreSolver::new(core()?)?;
            let mut linv_v = DenseMatrix::zeros(n, ell);
            for j in 0..ell {
                linv_v.set_column(j, &solver.solve(&v.column(j))?);
            }
            let g = v.tr_matmul(&linv_v);
            let gram = if ell == 0 {
                QrSolver::new(&DenseMatrix::identity(0))?
            } else {
                QrSolver::new(&g).map_err(|_| Error::SingularCore)?
            };
            Ok(CoreMap::TwoSidedPinv {
                solver,
                linv_v,
                gram,
            })
        }
    }
}

/// The regularization matrix whose general-form Tikhonov minimizer the
/// substitution reduction reproduces: `(I − Π)·C·P` with `C = L̃` (right
/// projection) or `C = P·L̃` (two-sided) and `Π` the orthogonal projector
/// onto `range(C·V)`. Other modes return `L` itself.
pub fn substitution_equivalent_matrix<T: Scalar>(
    reg: &ProjectedRegularizer<T>,
) -> Result<DenseMatrix<T>> {
    let l = reg.effective_matrix();
    let (CompositionMode::Right | CompositionMode::TwoSided, Some(core), false) =
        (reg.mode(), reg.core(), reg.basis().is_empty())
    else {
        return Ok(l);
    };
    let v = reg.basis().matrix();
    let c = if reg.mode() == CompositionMode::Right {
        core.clone()
    } else {
        core - &v.matmul(&v.tr_matmul(core))
    };
    let (w, _) = thin_qr(&c.matmul(v)).map_err(|_| Error::SingularCore)?;
    // L already equals C·P
    Ok(&l - &w.matmul(&w.tr_matmul(&l)))
}
