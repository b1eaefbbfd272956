//! Householder QR with optional column pivoting, and the complete
//! orthogonal decomposition built on it for minimal-norm least squares.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::matrix::DenseMatrix;
use super::triangular::{solve_lower_triangular, solve_upper_triangular};
use super::vector::{dot, norm2};

/// Compact Householder factorization `A·Π = Q·R`.
///
/// Reflector `k` is `I − vₖvₖᵀ·2/(vₖᵀvₖ)` acting on rows `k..m`.
#[derive(Clone, Debug)]
pub struct HouseholderQr<T> {
    m: usize,
    n: usize,
    r: DenseMatrix<T>,
    reflectors: Vec<Vec<T>>,
    perm: Vec<usize>,
}

impl<T: Scalar> HouseholderQr<T> {
    /// Unpivoted factorization.
    pub fn new(a: &DenseMatrix<T>) -> Self {
        Self::factor(a, false)
    }

    /// Factorization with greedy column pivoting (largest remaining column norm first).
    pub fn with_pivoting(a: &DenseMatrix<T>) -> Self {
        Self::factor(a, true)
    }

    fn factor(a: &DenseMatrix<T>, pivoting: bool) -> Self {
        let (m, n) = a.shape();
        let mut w = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let steps = m.min(n);
        let mut reflectors = Vec::with_capacity(steps);
        for k in 0..steps {
            if pivoting {
                let mut best = k;
                let mut best_norm = T::neg_infinity();
                for j in k..n {
                    let s: T = (k..m).map(|i| w[(i, j)] * w[(i, j)]).sum();
                    if s > best_norm {
                        best_norm = s;
                        best = j;
                    }
                }
                if best != k {
                    for i in 0..m {
                        let t = w[(i, k)];
                        w[(i, k)] = w[(i, best)];
                        w[(i, best)] = t;
                    }
                    perm.swap(k, best);
                }
            }
            let x: Vec<T> = (k..m).map(|i| w[(i, k)]).collect();
            let alpha = norm2(&x);
            let mut v = x;
            if alpha == T::zero() {
                reflectors.push(Vec::new());
                continue;
            }
            let alpha = if v[0] > T::zero() { -alpha } else { alpha };
            v[0] -= alpha;
            let vv = dot(&v, &v);
            if vv == T::zero() {
                reflectors.push(Vec::new());
                continue;
            }
            let two_over = T::lit(2.0) / vv;
            for j in k..n {
                let s: T = (k..m).map(|i| v[i - k] * w[(i, j)]).sum::<T>() * two_over;
                for i in k..m {
                    w[(i, j)] -= s * v[i - k];
                }
            }
            for i in k + 1..m {
                w[(i, k)] = T::zero();
            }
            w[(k, k)] = alpha;
            reflectors.push(v);
        }
        let r = DenseMatrix::from_fn(steps, n, |i, j| if j >= i { w[(i, j)] } else { T::zero() });
        Self {
            m,
            n,
            r,
            reflectors,
            perm,
        }
    }

    fn apply_reflector(&self, k: usize, y: &mut [T]) {
        let v = &self.reflectors[k];
        if v.is_empty() {
            return;
        }
        let vv = dot(v, v);
        let s = dot(v, &y[k..]) * T::lit(2.0) / vv;
        for (yi, &vi) in y[k..].iter_mut().zip(v) {
            *yi -= s * vi;
        }
    }

    /// `Qᵀ·b` with the full `m×m` orthogonal factor.
    pub fn apply_qt(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.m);
        let mut y = b.to_vec();
        for k in 0..self.reflectors.len() {
            self.apply_reflector(k, &mut y);
        }
        y
    }

    /// `Q·c` with the full `m×m` orthogonal factor.
    pub fn apply_q(&self, c: &[T]) -> Vec<T> {
        assert_eq!(c.len(), self.m);
        let mut y = c.to_vec();
        for k in (0..self.reflectors.len()).rev() {
            self.apply_reflector(k, &mut y);
        }
        y
    }

    /// Upper-trapezoidal factor, `min(m,n)×n`.
    pub fn r(&self) -> &DenseMatrix<T> {
        &self.r
    }

    /// Column permutation: column `j` of `A·Π` is column `perm[j]` of `A`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// First `min(m,n)` columns of `Q`.
    pub fn thin_q(&self) -> DenseMatrix<T> {
        let p = self.m.min(self.n);
        let mut q = DenseMatrix::zeros(self.m, p);
        let mut e = vec![T::zero(); self.m];
        for j in 0..p {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[j] = T::one();
            q.set_column(j, &self.apply_q(&e));
        }
        q
    }

    /// Number of diagonal entries `|R_ii| > tol·|R_00|`; meaningful after pivoting.
    pub fn numerical_rank(&self, tol: T) -> usize {
        let p = self.m.min(self.n);
        if p == 0 {
            return 0;
        }
        let lead = self.r[(0, 0)].abs();
        if lead == T::zero() {
            return 0;
        }
        (0..p)
            .take_while(|&i| self.r[(i, i)].abs() > tol * lead)
            .count()
    }
}

/// Thin QR of a tall full-column-rank matrix with `R_ii ≥ 0`.
///
/// Fails with `RankDeficient` when some `|R_ii| ≤ 1e-12·‖A‖_F`.
pub fn thin_qr<T: Scalar>(a: &DenseMatrix<T>) -> Result<(DenseMatrix<T>, DenseMatrix<T>)> {
    thin_qr_scaled(a, T::zero())
}

/// [`thin_qr`] with the rank threshold taken relative to
/// `max(‖A‖_F, scale)`, for columns that are images of unit vectors under
/// an operator of known size.
pub fn thin_qr_scaled<T: Scalar>(
    a: &DenseMatrix<T>,
    scale: T,
) -> Result<(DenseMatrix<T>, DenseMatrix<T>)> {
    let (m, l) = a.shape();
    if m < l {
        return Err(Error::ShapeMismatch(format!(
            "thin_qr needs rows >= cols, got {m}x{l}"
        )));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let qr = HouseholderQr::new(a);
    let mut q = qr.thin_q();
    let mut r = qr.r().top_left(l, l);
    let threshold = T::rank_tol() * a.frobenius_norm().max(scale);
    for i in 0..l {
        if r[(i, i)].abs() <= threshold {
            return Err(Error::RankDeficient {
                index: i,
                pivot: r[(i, i)].abs().as_f64(),
            });
        }
        if r[(i, i)] < T::zero() {
            for j in i..l {
                r[(i, j)] = -r[(i, j)];
            }
            for row in 0..m {
                q[(row, i)] = -q[(row, i)];
            }
        }
    }
    Ok((q, r))
}

/// Complete orthogonal decomposition `A·Π = Q·[T₁ᵀZᵀ; 0]` of a possibly
/// rank-deficient matrix, reusable for many minimal-norm solves.
#[derive(Clone, Debug)]
pub struct CompleteOrthogonal<T> {
    qr: HouseholderQr<T>,
    rank: usize,
    // QR of [R11 R12]ᵀ (n×rank)
    z: Option<HouseholderQr<T>>,
    t_upper: DenseMatrix<T>,
    n: usize,
}

impl<T: Scalar> CompleteOrthogonal<T> {
    pub fn new(a: &DenseMatrix<T>) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::NonFinite);
        }
        let qr = HouseholderQr::with_pivoting(a);
        let rank = qr.numerical_rank(T::rank_tol());
        let n = a.cols();
        if rank == 0 {
            return Ok(Self {
                qr,
                rank,
                z: None,
                t_upper: DenseMatrix::zeros(0, 0),
                n,
            });
        }
        let s_t = DenseMatrix::from_fn(n, rank, |i, j| qr.r()[(j, i)]);
        let z = HouseholderQr::new(&s_t);
        let t_upper = z.r().top_left(rank, rank);
        Ok(Self {
            qr,
            rank,
            z: Some(z),
            t_upper,
            n,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `x = A†b`.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        if b.len() != self.qr.m {
            return Err(Error::ShapeMismatch(format!(
                "rhs length {} for {} rows",
                b.len(),
                self.qr.m
            )));
        }
        let mut x = vec![T::zero(); self.n];
        let Some(z) = &self.z else { return Ok(x) };
        let c = self.qr.apply_qt(b);
        // [R11 R12]·w = c₁ with [R11 R12] = T₁ᵀ·Zᵀ
        let lower = self.t_upper.transpose();
        let u = solve_lower_triangular(&lower, &c[..self.rank])?;
        let mut padded = vec![T::zero(); self.n];
        padded[..self.rank].copy_from_slice(&u);
        let w = z.apply_q(&padded);
        for (j, &p) in self.qr.permutation().iter().enumerate() {
            x[p] = w[j];
        }
        Ok(x)
    }
}

/// Minimal-norm least-squares solution `A†b` via a rank-revealing factorization.
pub fn min_norm_lstsq_solve<T: Scalar>(a: &DenseMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    if b.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    CompleteOrthogonal::new(a)?.solve(b)
}

/// Solves a square nonsingular system through unpivoted QR.
#[derive(Clone, Debug)]
pub struct QrSolver<T> {
    qr: HouseholderQr<T>,
    r: DenseMatrix<T>,
}

impl<T: Scalar> QrSolver<T> {
    pub fn new(a: &DenseMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::ShapeMismatch(
                "QrSolver needs a square matrix".into(),
            ));
        }
        let qr = HouseholderQr::new(a);
        let r = qr.r().clone();
        let scale = a.max_abs();
        for i in 0..r.rows() {
            if r[(i, i)].abs() <= T::rank_tol() * scale {
                return Err(Error::SingularTriangular { index: i });
            }
        }
        Ok(Self { qr, r })
    }

    /// `A⁻¹b`
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        solve_upper_triangular(&self.r, &self.qr.apply_qt(b))
    }

    /// `A⁻ᵀb`
    pub fn solve_transpose(&self, b: &[T]) -> Result<Vec<T>> {
        let y = solve_lower_triangular(&self.r.transpose(), b)?;
        Ok(self.qr.apply_q(&y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>, tol: f64) -> bool {
        a.max_abs_diff(b) <= tol
    }

    #[test]
    fn qr_of_unit_column() {
        let a = DenseMatrix::from_rows(&[vec![1.0], vec![0.0]]);
        let (q, r) = thin_qr(&a).unwrap();
        assert!(close(&q, &a, 1e-15));
        assert!((r[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn qr_of_three_four_column() {
        let a = DenseMatrix::from_rows(&[vec![3.0], vec![4.0]]);
        let (q, r) = thin_qr(&a).unwrap();
        assert!(close(
            &q,
            &DenseMatrix::from_rows(&[vec![0.6], vec![0.8]]),
            1e-15
        ));
        assert!((r[(0, 0)] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn qr_reconstructs_random_tall_matrix() {
        // deterministic pseudo-random 6x2
        let vals = [
            0.37, -1.2, 0.88, 0.05, -0.61, 1.9, 0.44, 0.73, -0.29, -1.05, 1.31, 0.12,
        ];
        let a = DenseMatrix::from_row_major(6, 2, vals.to_vec()).unwrap();
        let (q, r) = thin_qr(&a).unwrap();
        let qtq = q.tr_matmul(&q);
        assert!(close(&qtq, &DenseMatrix::identity(2), 2e-12));
        assert!(close(&q.matmul(&r), &a, 1e-12 * a.frobenius_norm()));
        assert_eq!(r[(1, 0)], 0.0);
        assert!(r[(0, 0)] > 0.0 && r[(1, 1)] > 0.0);
    }

    #[test]
    fn qr_detects_rank_deficiency() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]);
        assert!(matches!(
            thin_qr(&a),
            Err(Error::RankDeficient { index: 1, .. })
        ));
    }

    #[test]
    fn min_norm_examples() {
        let x = min_norm_lstsq_solve(&DenseMatrix::<f64>::identity(3), &[1.0, 2.0, 3.0]).unwrap();
        for (a, b) in x.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        let a = DenseMatrix::<f64>::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
        let x = min_norm_lstsq_solve(&a, &[5.0, 7.0]).unwrap();
        assert!((x[0] - 5.0).abs() < 1e-15 && x[1].abs() < 1e-15);
    }

    #[test]
    fn min_norm_rejects_nonfinite() {
        let a = DenseMatrix::<f64>::identity(2);
        assert_eq!(
            min_norm_lstsq_solve(&a, &[1.0, f64::INFINITY]),
            Err(Error::NonFinite)
        );
    }

    #[test]
    fn qr_solver_inverts_and_transposes() {
        let a = DenseMatrix::<f64>::from_rows(&[
            vec![2.0, 1.0, 0.0],
            vec![-1.0, 3.0, 0.5],
            vec![0.0, 1.0, 4.0],
        ]);
        let s = QrSolver::new(&a).unwrap();
        let b = [1.0, -2.0, 0.25];
        let x = s.solve(&b).unwrap();
        let y = s.solve_transpose(&b).unwrap();
        let ax = a.matvec(&x);
        let aty = a.tr_matvec(&y);
        for i in 0..3 {
            assert!((ax[i] - b[i]).abs() < 1e-14);
            assert!((aty[i] - b[i]).abs() < 1e-14);
        }
    }
}
