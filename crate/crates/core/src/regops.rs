//! Finite-difference regularization matrices, their null spaces and
//! projectors, and composite regularizers `L̃P`, `PL̃P`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{CompleteOrthogonal, DenseMatrix, QrSolver, Tridiagonal};
use crate::nearness::{NullSpaceBasis, ProjectorMatrix};
use crate::scalar::Scalar;

/// Named regularization matrices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RegularizerKind<T> {
    Identity,
    /// Scaled first differences, `(n−1)×n`.
    L1Rect,
    /// Scaled second differences, `(n−2)×n`.
    L2Rect,
    /// Square bidiagonal first-difference matrix with last row `[0 … 0 δ]/2`.
    L1Delta {
        delta: T,
    },
    /// `L1Rect` with a zero row appended.
    L1Zero,
    /// `L2Rect` padded with zero first and last rows.
    L2Zero,
    /// Square tridiagonal `tridiag(−1, 2, −1)/4`.
    L2Tilde,
}

/// The two null spaces used with the difference operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NullSpaceKind {
    /// `span{[1,…,1]ᵀ}`
    N1,
    /// `span{[1,…,1]ᵀ, [1,2,…,n]ᵀ}`
    N2,
}

impl NullSpaceKind {
    pub fn dim(self) -> usize {
        match self {
            NullSpaceKind::N1 => 1,
            NullSpaceKind::N2 => 2,
        }
    }
}

/// How the final regularization matrix is assembled from its pieces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompositionMode {
    /// `L = I`
    Identity,
    /// `L = L̃·P`
    Right,
    /// `L = P·L̃·P`
    TwoSided,
    /// `L` square and possibly singular, used as given.
    Plain,
}

pub fn make_regularization_matrix<T: Scalar>(
    kind: RegularizerKind<T>,
    n: usize,
) -> Result<DenseMatrix<T>> {
    if n < 3 {
        return Err(Error::BadDimension(format!(
            "regularization matrices need n >= 3, got {n}"
        )));
    }
    let half = T::lit(0.5);
    let quarter = T::lit(0.25);
    let first_diff = |rows: usize| {
        DenseMatrix::from_fn(rows, n, |i, j| {
            if j == i {
                half
            } else if j == i + 1 {
                -half
            } else {
                T::zero()
            }
        })
    };
    let second_row = |i: usize, j: usize| -> T {
        // row centred on column i
        if j == i {
            T::lit(2.0) * quarter
        } else if j + 1 == i || j == i + 1 {
            -quarter
        } else {
            T::zero()
        }
    };
    Ok(match kind {
        RegularizerKind::Identity => DenseMatrix::identity(n),
        RegularizerKind::L1Rect => first_diff(n - 1),
        RegularizerKind::L2Rect => DenseMatrix::from_fn(n - 2, n, |i, j| second_row(i + 1, j)),
        RegularizerKind::L1Delta { delta } => {
            if !(delta > T::zero()) {
                return Err(Error::InvalidConfig(format!(
                    "delta must be positive, got {delta}"
                )));
            }
            let mut m = first_diff(n);
            m[(n - 1, n - 1)] = half * delta;
            m
        }
        RegularizerKind::L1Zero => {
            let mut m = first_diff(n);
            m[(n - 1, n - 1)] = T::zero();
            m
        }
        RegularizerKind::L2Zero => DenseMatrix::from_fn(n, n, |i, j| {
            if i == 0 || i == n - 1 {
                T::zero()
            } else {
                second_row(i, j)
            }
        }),
        RegularizerKind::L2Tilde => DenseMatrix::from_fn(n, n, second_row),
    })
}

/// Orthonormal bases of the first- and second-difference null spaces.
pub fn make_nullspace_basis<T: Scalar>(
    which: NullSpaceKind,
    n: usize,
) -> Result<NullSpaceBasis<T>> {
    if n < 3 {
        return Err(Error::BadDimension(format!(
            "null-space bases need n >= 3, got {n}"
        )));
    }
    let nf = T::from_usize(n).unwrap();
    let c = T::one() / nf.sqrt();
    let v = match which {
        NullSpaceKind::N1 => DenseMatrix::from_fn(n, 1, |_, _| c),
        NullSpaceKind::N2 => {
            // ‖[i − (n+1)/2]‖² = n(n²−1)/12
            let mid = (nf + T::one()) * T::lit(0.5);
            let norm = (nf * (nf * nf - T::one()) / T::lit(12.0)).sqrt();
            DenseMatrix::from_fn(n, 2, |i, j| {
                if j == 0 {
                    c
                } else {
                    (T::from_usize(i + 1).unwrap() - mid) / norm
                }
            })
        }
    };
    NullSpaceBasis::from_orthonormal(v)
}

/// Entrywise closed forms of the projectors `P₁`, `P₂`.
pub fn make_projector_closed<T: Scalar>(
    which: NullSpaceKind,
    n: usize,
) -> Result<ProjectorMatrix<T>> {
    if n < 2 {
        return Err(Error::BadDimension(format!(
            "closed-form projectors need n >= 2, got {n}"
        )));
    }
    let nf = T::from_usize(n).unwrap();
    let p = match which {
        NullSpaceKind::N1 => DenseMatrix::from_fn(n, n, |h, k| {
            if h == k {
                (nf - T::one()) / nf
            } else {
                -T::one() / nf
            }
        }),
        NullSpaceKind::N2 => {
            let denom = nf * (nf + T::one()) * (nf - T::one());
            DenseMatrix::from_fn(n, n, |h0, k0| {
                let h = T::from_usize(h0 + 1).unwrap();
                let k = T::from_usize(k0 + 1).unwrap();
                let num = T::lit(2.0)
                    * (nf + T::one())
                    * (T::lit(-3.0) * h + T::lit(2.0) * nf + T::one())
                    + T::lit(6.0) * k * (T::lit(2.0) * h - nf - T::one());
                let kron = if h0 == k0 { T::one() } else { T::zero() };
                kron - num / denom
            })
        }
    };
    Ok(ProjectorMatrix::from_matrix_unchecked(p))
}

/// Solver for the invertible core `L̃`.
#[derive(Clone, Debug)]
pub enum CoreSolver<T> {
    Tridiagonal(Tridiagonal<T>),
    Dense(QrSolver<T>),
}

impl<T: Scalar> CoreSolver<T> {
    pub fn new(core: &DenseMatrix<T>) -> Result<Self> {
        if !core.is_square() {
            return Err(Error::ShapeMismatch(
                "regularization core must be square".into(),
            ));
        }
        match Tridiagonal::from_dense(core) {
            Some(t) => {
                t.check_pivots()?;
                Ok(CoreSolver::Tridiagonal(t))
            }
            None => QrSolver::new(core)
                .map(CoreSolver::Dense)
                .map_err(|_| Error::SingularCore),
        }
    }

    /// `L̃⁻¹b`
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        match self {
            CoreSolver::Tridiagonal(t) => t.solve(b),
            CoreSolver::Dense(s) => s.solve(b).map_err(|_| Error::SingularCore),
        }
    }

    /// `L̃⁻ᵀb`
    pub fn solve_transpose(&self, b: &[T]) -> Result<Vec<T>> {
        match self {
            CoreSolver::Tridiagonal(t) => t.solve_transpose(b),
            CoreSolver::Dense(s) => s.solve_transpose(b).map_err(|_| Error::SingularCore),
        }
    }
}

/// A regularization matrix together with its known null space.
#[derive(Clone, Debug)]
pub struct ProjectedRegularizer<T> {
    n: usize,
    core: Option<DenseMatrix<T>>,
    basis: NullSpaceBasis<T>,
    mode: CompositionMode,
}

impl<T: Scalar> ProjectedRegularizer<T> {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            core: None,
            basis: NullSpaceBasis::empty(n),
            mode: CompositionMode::Identity,
        }
    }

    /// `L = L̃·P` with `P = I − VVᵀ`.
    pub fn right(core: DenseMatrix<T>, basis: NullSpaceBasis<T>) -> Result<Self> {
        Self::projected(core, basis, CompositionMode::Right)
    }

    /// `L = P·L̃·P` with `P = I − VVᵀ`.
    pub fn two_sided(core: DenseMatrix<T>, basis: NullSpaceBasis<T>) -> Result<Self> {
        Self::projected(core, basis, CompositionMode::TwoSided)
    }

    fn projected(
        core: DenseMatrix<T>,
        basis: NullSpaceBasis<T>,
        mode: CompositionMode,
    ) -> Result<Self> {
        if core.rows() != basis.n() || !core.is_square() {
            return Err(Error::ShapeMismatch(
                "core and null-space basis dimensions differ".into(),
            ));
        }
        CoreSolver::new(&core)?;
        Ok(Self {
            n: core.rows(),
            core: Some(core),
            basis,
            mode,
        })
    }

    /// A square, possibly singular `L` whose null space is exactly `range(V)`.
    pub fn plain(l: DenseMatrix<T>, basis: NullSpaceBasis<T>) -> Result<Self> {
        let n = l.rows();
        if !l.is_square() || basis.n() != n {
            return Err(Error::ShapeMismatch(
                "plain regularizer must be square and match its basis".into(),
            ));
        }
        let lv = l.matmul(basis.matrix());
        if lv.max_abs() > T::tol(1e-10) * l.max_abs() {
            return Err(Error::InvalidConfig(
                "plain regularizer does not annihilate its null-space basis".into(),
            ));
        }
        let rank = CompleteOrthogonal::new(&l)?.rank();
        if rank != n - basis.ell() {
            return Err(Error::InvalidConfig(format!(
                "plain regularizer has rank {rank}, expected {} for a {}-dimensional null space",
                n - basis.ell(),
                basis.ell()
            )));
        }
        Ok(Self {
            n,
            core: Some(l),
            basis,
            mode: CompositionMode::Plain,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> CompositionMode {
        self.mode
    }

    pub fn basis(&self) -> &NullSpaceBasis<T> {
        &self.basis
    }

    /// `L̃` for projected modes, `L` itself for plain mode.
    pub fn core(&self) -> Option<&DenseMatrix<T>> {
        self.core.as_ref()
    }

    /// The assembled regularization matrix `L`.
    pub fn effective_matrix(&self) -> DenseMatrix<T> {
        let Some(core) = &self.core else {
            return DenseMatrix::identity(self.n);
        };
        match self.mode {
            CompositionMode::Identity => DenseMatrix::identity(self.n),
            CompositionMode::Plain => core.clone(),
            CompositionMode::Right | CompositionMode::TwoSided => {
                let v = self.basis.matrix();
                let lp = core - &core.matmul(v).matmul(&v.transpose());
                if self.mode == CompositionMode::Right {
                    lp
                } else {
                    &lp - &v.matmul(&v.tr_matmul(&lp))
                }
            }
        }
    }
}

/// Builds and validates a composite regularizer.
///
/// `which` selects the null space for projected modes; in plain mode it
/// defaults to the null space of the chosen matrix.
pub fn compose_regularizer<T: Scalar>(
    kind: RegularizerKind<T>,
    n: usize,
    mode: CompositionMode,
    which: Option<NullSpaceKind>,
) -> Result<ProjectedRegularizer<T>> {
    match mode {
        CompositionMode::Identity => {
            if n == 0 {
                return Err(Error::BadDimension("n must be positive".into()));
            }
            Ok(ProjectedRegularizer::identity(n))
        }
        CompositionMode::Right | CompositionMode::TwoSided => {
            if !matches!(
                kind,
                RegularizerKind::L1Delta { .. } | RegularizerKind::L2Tilde
            ) {
                return Err(Error::InvalidConfig(format!(
                    "{kind:?} is not an invertible core"
                )));
            }
            let which = which
                .ok_or_else(|| Error::InvalidConfig("projected modes need a null space".into()))?;
            let core = make_regularization_matrix(kind, n)?;
            let basis = make_nullspace_basis(which, n)?;
            ProjectedRegularizer::projected(core, basis, mode)
        }
        CompositionMode::Plain => {
            let default = match kind {
                RegularizerKind::L1Zero => NullSpaceKind::N1,
                RegularizerKind::L2Zero => NullSpaceKind::N2,
                _ => {
                    return Err(Error::InvalidConfig(format!(
                        "{kind:?} is not a square singular regularizer"
                    )))
                }
            };
            let l = make_regularization_matrix(kind, n)?;
            let basis = make_nullspace_basis(which.unwrap_or(default), n)?;
            ProjectedRegularizer::plain(l, basis)
        }
    }
}

/// The regularizers compared in the experiments, by their command-line names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegularizerName {
    /// `I`
    Identity,
    /// `L10`: `L_{1,0}`
    L10,
    /// `L20`: `L_{2,0}`
    L20,
    /// `L1dP1`: `L_{1,δ}P₁`
    L1dP1,
    /// `L2tP2`: `L̃₂P₂`
    L2tP2,
    /// `P2L2tP2`: `P₂L̃₂P₂`
    P2L2tP2,
}

impl RegularizerName {
    pub const ALL: [RegularizerName; 6] = [
        RegularizerName::Identity,
        RegularizerName::L10,
        RegularizerName::L1dP1,
        RegularizerName::L20,
        RegularizerName::L2tP2,
        RegularizerName::P2L2tP2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegularizerName::Identity => "I",
            RegularizerName::L10 => "L10",
            RegularizerName::L20 => "L20",
            RegularizerName::L1dP1 => "L1dP1",
            RegularizerName::L2tP2 => "L2tP2",
            RegularizerName::P2L2tP2 => "P2L2tP2",
        }
    }

    pub fn build<T: Scalar>(self, n: usize, delta: T) -> Result<ProjectedRegularizer<T>> {
        use CompositionMode::*;
        use NullSpaceKind::*;
        match self {
            RegularizerName::Identity => {
                compose_regularizer(RegularizerKind::Identity, n, Identity, None)
            }
            RegularizerName::L10 => {
                compose_regularizer(RegularizerKind::L1Zero, n, Plain, Some(N1))
            }
            RegularizerName::L20 => {
                compose_regularizer(RegularizerKind::L2Zero, n, Plain, Some(N2))
            }
            RegularizerName::L1dP1 => {
                compose_regularizer(RegularizerKind::L1Delta { delta }, n, Right, Some(N1))
            }
            RegularizerName::L2tP2 => {
                compose_regularizer(RegularizerKind::L2Tilde, n, Right, Some(N2))
            }
            RegularizerName::P2L2tP2 => {
                compose_regularizer(RegularizerKind::L2Tilde, n, TwoSided, Some(N2))
            }
        }
    }
}

impl fmt::Display for RegularizerName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegularizerName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| {
                let valid: Vec<&str> = Self::ALL.iter().map(|r| r.as_str()).collect();
                Error::InvalidConfig(format!(
                    "unknown regularizer `{s}`; valid names: {}",
                    valid.join(", ")
                ))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nearness::build_projector;

    fn m(rows: &[&[f64]]) -> DenseMatrix<f64> {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    #[test]
    fn stencils_for_n3() {
        let l1 = make_regularization_matrix::<f64>(RegularizerKind::L1Rect, 3).unwrap();
        assert_eq!(l1, m(&[&[0.5, -0.5, 0.0], &[0.0, 0.5, -0.5]]));
        let l1d = make_regularization_matrix(RegularizerKind::L1Delta { delta: 1.0 }, 3).unwrap();
        assert_eq!(
            l1d,
            m(&[&[0.5, -0.5, 0.0], &[0.0, 0.5, -0.5], &[0.0, 0.0, 0.5]])
        );
        let l2t = make_regularization_matrix::<f64>(RegularizerKind::L2Tilde, 3).unwrap();
        assert_eq!(
            l2t,
            m(&[&[0.5, -0.25, 0.0], &[-0.25, 0.5, -0.25], &[0.0, -0.25, 0.5]])
        );
    }

    #[test]
    fn stencil_shapes_and_zero_rows() {
        let n = 6;
        assert_eq!(
            make_regularization_matrix::<f64>(RegularizerKind::L1Rect, n)
                .unwrap()
                .shape(),
            (5, 6)
        );
        assert_eq!(
            make_regularization_matrix::<f64>(RegularizerKind::L2Rect, n)
                .unwrap()
                .shape(),
            (4, 6)
        );
        let l20 = make_regularization_matrix::<f64>(RegularizerKind::L2Zero, n).unwrap();
        assert!(l20.row(0).iter().chain(l20.row(n - 1)).all(|&x| x == 0.0));
        assert_eq!(l20.row(2), &[0.0, -0.25, 0.5, -0.25, 0.0, 0.0]);
        let l10 = make_regularization_matrix::<f64>(RegularizerKind::L1Zero, n).unwrap();
        assert!(l10.row(n - 1).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn bad_dimension_and_delta() {
        assert!(matches!(
            make_regularization_matrix::<f64>(RegularizerKind::L2Tilde, 2),
            Err(Error::BadDimension(_))
        ));
        assert!(make_regularization_matrix(RegularizerKind::L1Delta { delta: 0.0 }, 4).is_err());
    }

    #[test]
    fn difference_operators_annihilate_their_null_spaces() {
        let n = 10;
        let l1 = make_regularization_matrix::<f64>(RegularizerKind::L1Rect, n).unwrap();
        let l2 = make_regularization_matrix::<f64>(RegularizerKind::L2Rect, n).unwrap();
        assert!(l1.matvec(&vec![1.0; n]).iter().all(|&x| x == 0.0));
        let ramp: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        assert!(l2.matvec(&ramp).iter().all(|&x| x == 0.0));
        assert!(l2.matvec(&vec![1.0; n]).iter().all(|&x| x == 0.0));
        let v1 = make_nullspace_basis::<f64>(NullSpaceKind::N1, n).unwrap();
        let v2 = make_nullspace_basis::<f64>(NullSpaceKind::N2, n).unwrap();
        assert!(l1.matmul(v1.matrix()).max_abs() < 1e-16);
        assert!(l2.matmul(v2.matrix()).max_abs() < 1e-15);
    }

    #[test]
    fn nullspace_bases_small_cases() {
        let b = make_nullspace_basis::<f64>(NullSpaceKind::N1, 4).unwrap();
        assert_eq!(b.matrix().column(0), vec![0.5; 4]);
        let b = make_nullspace_basis::<f64>(NullSpaceKind::N2, 3).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let col = b.matrix().column(1);
        for (a, e) in col.iter().zip([-s, 0.0, s]) {
            assert!((a - e).abs() < 1e-15);
        }
    }

    #[test]
    fn closed_projectors_small_cases() {
        let p1 = make_projector_closed::<f64>(NullSpaceKind::N1, 2).unwrap();
        assert_eq!(p1.matrix(), &m(&[&[0.5, -0.5], &[-0.5, 0.5]]));
        let p2 = make_projector_closed::<f64>(NullSpaceKind::N2, 2).unwrap();
        assert!(p2.matrix().max_abs() < 1e-15);
        let p2 = make_projector_closed::<f64>(NullSpaceKind::N2, 3).unwrap();
        let w = [1.0, -2.0, 1.0];
        let expect = DenseMatrix::from_fn(3, 3, |i, j| w[i] * w[j] / 6.0);
        assert!(p2.matrix().max_abs_diff(&expect) < 1e-15);
        assert!(make_projector_closed::<f64>(NullSpaceKind::N1, 1).is_err());
    }

    #[test]
    fn closed_projectors_match_generic_construction() {
        for n in [3usize, 10, 100, 200] {
            for which in [NullSpaceKind::N1, NullSpaceKind::N2] {
                let closed = make_projector_closed::<f64>(which, n).unwrap();
                let raw =
                    DenseMatrix::from_fn(
                        n,
                        which.dim(),
                        |i, j| if j == 0 { 1.0 } else { (i + 1) as f64 },
                    );
                let generic = build_projector(&raw, false).unwrap();
                assert!(
                    closed.matrix().max_abs_diff(generic.matrix()) < 1e-12,
                    "n={n} {which:?}"
                );
            }
        }
    }

    #[test]
    fn l1delta_distance_closed_form() {
        for &delta in &[1.0, 0.1] {
            for &n in &[10usize, 100, 200] {
                let l = make_regularization_matrix(RegularizerKind::L1Delta { delta }, n).unwrap();
                let p = make_projector_closed::<f64>(NullSpaceKind::N1, n).unwrap();
                let d = (&l - &l.matmul(p.matrix())).frobenius_norm();
                let expect = delta / (2.0 * (n as f64).sqrt());
                assert!((d - expect).abs() <= 1e-12 * expect);
                let l10 = make_regularization_matrix::<f64>(RegularizerKind::L1Zero, n).unwrap();
                assert!(((&l - &l10).frobenius_norm() - delta / 2.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn compose_validates_modes() {
        let r = compose_regularizer::<f64>(
            RegularizerKind::Identity,
            5,
            CompositionMode::Identity,
            None,
        )
        .unwrap();
        assert_eq!(r.effective_matrix(), DenseMatrix::identity(5));
        assert_eq!(r.basis().ell(), 0);
        assert!(compose_regularizer::<f64>(
            RegularizerKind::L1Zero,
            5,
            CompositionMode::Right,
            Some(NullSpaceKind::N1)
        )
        .is_err());
        assert!(compose_regularizer::<f64>(
            RegularizerKind::L2Tilde,
            5,
            CompositionMode::Plain,
            None
        )
        .is_err());
        let tiny = compose_regularizer(
            RegularizerKind::L1Delta { delta: 1e-300 },
            5,
            CompositionMode::Right,
            Some(NullSpaceKind::N1),
        );
        assert_eq!(tiny.unwrap_err(), Error::SingularCore);
    }

    #[test]
    fn two_sided_regularizer_is_symmetric_and_annihilates() {
        let r = RegularizerName::P2L2tP2.build(12, 1.0).unwrap();
        let l = r.effective_matrix();
        assert!(l.matmul(r.basis().matrix()).max_abs() < 1e-15);
        assert!(l.asymmetry().unwrap() <= 1e-12);
    }

    #[test]
    fn right_regularizer_matches_displayed_last_row() {
        let n = 7;
        let delta = 0.3;
        let r = compose_regularizer(
            RegularizerKind::L1Delta { delta },
            n,
            CompositionMode::Right,
            Some(NullSpaceKind::N1),
        )
        .unwrap();
        let l = r.effective_matrix();
        let nf = n as f64;
        for j in 0..n {
            let expect = if j == n - 1 {
                0.5 * (1.0 - 1.0 / nf) * delta
            } else {
                -0.5 * delta / nf
            };
            assert!((l[(n - 1, j)] - expect).abs() < 1e-15);
        }
        let l1d = make_regularization_matrix(RegularizerKind::L1Delta { delta }, n).unwrap();
        for i in 0..n - 1 {
            for j in 0..n {
                assert!((l[(i, j)] - l1d[(i, j)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn names_round_trip_and_reject_unknown() {
        for r in RegularizerName::ALL {
            assert_eq!(r.as_str().parse::<RegularizerName>().unwrap(), r);
        }
        let err = "L3".parse::<RegularizerName>().unwrap_err().to_string();
        assert!(err.contains("I, L10, L1dP1, L20, L2tP2, P2L2tP2"), "{err}");
    }
}
