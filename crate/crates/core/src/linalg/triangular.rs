use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::matrix::DenseMatrix;

fn check_diagonal<T: Scalar>(r: &DenseMatrix<T>) -> Result<()> {
    let threshold = T::rank_tol() * r.max_abs();
    for i in 0..r.rows() {
        let d = r[(i, i)].abs();
        if d == T::zero() || d <= threshold {
            return Err(Error::SingularTriangular { index: i });
        }
    }
    Ok(())
}

fn check_shape<T: Scalar>(r: &DenseMatrix<T>, c: &[T]) -> Result<()> {
    if !r.is_square() || r.rows() != c.len() {
        return Err(Error::ShapeMismatch(format!(
            "triangular solve with {}x{} matrix and rhs of length {}",
            r.rows(),
            r.cols(),
            c.len()
        )));
    }
    Ok(())
}

/// Back substitution for `R·x = c`; entries below the diagonal are ignored.
pub fn solve_upper_triangular<T: Scalar>(r: &DenseMatrix<T>, c: &[T]) -> Result<Vec<T>> {
    check_shape(r, c)?;
    check_diagonal(r)?;
    let n = c.len();
    let mut x = c.to_vec();
    for i in (0..n).rev() {
        let row = r.row(i);
        let mut s = x[i];
        for j in i + 1..n {
            s -= row[j] * x[j];
        }
        x[i] = s / row[i];
    }
    Ok(x)
}

/// Forward substitution for `L·x = c`; entries above the diagonal are ignored.
pub fn solve_lower_triangular<T: Scalar>(l: &DenseMatrix<T>, c: &[T]) -> Result<Vec<T>> {
    check_shape(l, c)?;
    check_diagonal(l)?;
    let n = c.len();
    let mut x = c.to_vec();
    for i in 0..n {
        let row = l.row(i);
        let mut s = x[i];
        for j in 0..i {
            s -= row[j] * x[j];
        }
        x[i] = s / row[i];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_and_two_by_two() {
        let r = DenseMatrix::from_rows(&[vec![2.0]]);
        assert_eq!(solve_upper_triangular(&r, &[4.0]).unwrap(), vec![2.0]);
        let r = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        assert_eq!(
            solve_upper_triangular(&r, &[3.0, 1.0]).unwrap(),
            vec![2.0, 1.0]
        );
    }

    #[test]
    fn random_upper_triangular_remultiplies() {
        let r = DenseMatrix::from_fn(5, 5, |i, j| {
            if j < i {
                0.0
            } else if i == j {
                2.0 + i as f64 * 0.3
            } else {
                ((i * 7 + j * 3) % 5) as f64 * 0.2 - 0.4
            }
        });
        let c = [0.3, -1.0, 2.5, 0.7, -0.2];
        let x = solve_upper_triangular(&r, &c).unwrap();
        let back = r.matvec(&x);
        let res: f64 = back
            .iter()
            .zip(&c)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let cn: f64 = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(res <= 1e-12 * cn);
    }

    #[test]
    fn zero_pivot_is_singular() {
        let r = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]);
        assert_eq!(
            solve_upper_triangular(&r, &[1.0, 1.0]),
            Err(Error::SingularTriangular { index: 1 })
        );
        let l = DenseMatrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0]]);
        assert_eq!(
            solve_lower_triangular(&l, &[1.0, 1.0]),
            Err(Error::SingularTriangular { index: 0 })
        );
    }
}
