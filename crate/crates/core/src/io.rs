//! Plain-text matrix format.
//!
//! First line `rows cols`, then `rows` lines of whitespace-separated
//! decimal entries. Values are written with 17 significant digits so that
//! `f64` data round-trips exactly. Vectors are stored as `n×1` matrices.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

pub fn parse_matrix<T: Scalar>(text: &str) -> Result<DenseMatrix<T>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty input".into(),
    })?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(Error::Parse {
            line: hline,
            msg: format!("expected `rows cols`, got `{header}`"),
        });
    }
    let parse_dim = |s: &str| -> Result<usize> {
        match usize::from_str(s) {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(Error::Parse {
                line: hline,
                msg: format!("invalid dimension `{s}`"),
            }),
        }
    };
    let rows = parse_dim(dims[0])?;
    let cols = parse_dim(dims[1])?;
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen_rows = 0;
    for (lineno, line) in lines {
        if seen_rows == rows {
            return Err(Error::Parse {
                line: lineno,
                msg: "more rows than declared".into(),
            });
        }
        let before = data.len();
        for tok in line.split_whitespace() {
            let v = f64::from_str(tok).map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("invalid number `{tok}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("non-finite entry `{tok}`"),
                });
            }
            data.push(T::lit(v));
        }
        if data.len() - before != cols {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected {cols} entries, found {}", data.len() - before),
            });
        }
        seen_rows += 1;
    }
    if seen_rows != rows {
        return Err(Error::Parse {
            line: hline,
            msg: format!("declared {rows} rows, found {seen_rows}"),
        });
    }
    DenseMatrix::from_row_major(rows, cols, data)
}

pub fn format_matrix<T: Scalar>(m: &DenseMatrix<T>) -> String {
    let mut s = String::new();
    writeln!(s, "{} {}", m.rows(), m.cols()).unwrap();
    for i in 0..m.rows() {
        let row: Vec<String> = m
            .row(i)
            .iter()
            .map(|x| format!("{:.16e}", x.as_f64()))
            .collect();
        writeln!(s, "{}", row.join(" ")).unwrap();
    }
    s
}

pub fn format_vector<T: Scalar>(v: &[T]) -> String {
    format_matrix(&DenseMatrix::column_vector(v))
}

pub fn read_matrix<T: Scalar>(path: impl AsRef<Path>) -> Result<DenseMatrix<T>> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_matrix(&text)
}

pub fn write_matrix<T: Scalar>(path: impl AsRef<Path>, m: &DenseMatrix<T>) -> Result<()> {
    std::fs::write(path.as_ref(), format_matrix(m))
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))
}

pub fn write_vector<T: Scalar>(path: impl AsRef<Path>, v: &[T]) -> Result<()> {
    write_matrix(path, &DenseMatrix::column_vector(v))
}
