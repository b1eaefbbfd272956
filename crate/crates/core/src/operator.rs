use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Matrix-free linear map `x ↦ M·x`.
pub trait LinearOperator<T: Scalar> {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &[T]) -> Vec<T>;

    /// Cheap upper estimate of the operator norm, if one is known.
    fn norm_estimate(&self) -> Option<T> {
        None
    }
}

impl<T: Scalar> LinearOperator<T> for DenseMatrix<T> {
    fn nrows(&self) -> usize {
        self.rows()
    }

    fn ncols(&self) -> usize {
        self.cols()
    }

    fn apply(&self, x: &[T]) -> Vec<T> {
        self.matvec(x)
    }

    fn norm_estimate(&self) -> Option<T> {
        Some(self.frobenius_norm())
    }
}

impl<T: Scalar, O: LinearOperator<T> + ?Sized> LinearOperator<T> for &O {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }

    fn ncols(&self) -> usize {
        (**self).ncols()
    }

    fn apply(&self, x: &[T]) -> Vec<T> {
        (**self).apply(x)
    }

    fn norm_estimate(&self) -> Option<T> {
        (**self).norm_estimate()
    }
}

/// Adapts a closure into a [`LinearOperator`].
pub struct FnOperator<F> {
    rows: usize,
    cols: usize,
    f: F,
}

impl<F> FnOperator<F> {
    pub fn new(rows: usize, cols: usize, f: F) -> Self {
        Self { rows, cols, f }
    }
}

impl<T: Scalar, F: Fn(&[T]) -> Vec<T>> LinearOperator<T> for FnOperator<F> {
    fn nrows(&self) -> usize {
        self.rows
    }

    fn ncols(&self) -> usize {
        self.cols
    }

    fn apply(&self, x: &[T]) -> Vec<T> {
        (self.f)(x)
    }
}

/// Assembles the dense matrix of an operator column by column.
pub fn assemble<T: Scalar, O: LinearOperator<T> + ?Sized>(op: &O) -> DenseMatrix<T> {
    let (m, n) = (op.nrows(), op.ncols());
    let mut out = DenseMatrix::zeros(m, n);
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e[j] = T::one();
        out.set_column(j, &op.apply(&e));
        e[j] = T::zero();
    }
    out
}
