//! Plain-text matrix format used for every matrix and vector file.
//!
//! ```text
//! rows cols
//! a11 a12 ... a1c
//! ...
//! ```
//!
//! Entries are written in scientific notation with 17 significant digits,
//! which round-trips every finite `f64` exactly.

use super::matrix::Matrix;
use crate::error::{Error, Result};

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_matrix(m: &Matrix) -> String {
    let mut out = String::with_capacity(24 * m.rows() * m.cols() + 16);
    out.push_str(&format!("{} {}\n", m.rows(), m.cols()));
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|&v| format_f64(v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Parses a matrix from the text format. Trailing blank lines are ignored.
pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("matrix text is empty".into()))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(Error::Parse(format!("bad matrix header {header:?}")));
    }
    let rows: usize = parse_usize(dims[0])?;
    let cols: usize = parse_usize(dims[1])?;
    let mut data = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("matrix text ends after {i} of {rows} rows")))?;
        let before = data.len();
        for tok in line.split_whitespace() {
            data.push(
                tok.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad number {tok:?} in row {i}")))?,
            );
        }
        if data.len() - before != cols {
            return Err(Error::Parse(format!(
                "row {i} has {} entries, expected {cols}",
                data.len() - before
            )));
        }
    }
    if lines.next().is_some() {
        return Err(Error::Parse("extra lines after matrix".into()));
    }
    Matrix::from_vec(rows, cols, data)
}

/// Parses a vector given either as a column/row matrix in the text format or
/// as comma/space separated numbers.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let trimmed = text.trim();
    if trimmed.lines().count() > 1 {
        let m = parse_matrix(trimmed)?;
        if m.rows() != 1 && m.cols() != 1 {
            return Err(Error::Parse(format!(
                "expected a vector, got a {}x{} matrix",
                m.rows(),
                m.cols()
            )));
        }
        return Ok(m.into_vec());
    }
    trimmed
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number {t:?}")))
        })
        .collect()
}

/// Matrices serialize as a single string in the text format.
impl serde::Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&write_matrix(self))
    }
}

impl<'de> serde::Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_matrix(&text).map_err(serde::de::Error::custom)
    }
}

fn parse_usize(tok: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| Error::Parse(format!("bad dimension {tok:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_example() {
        let m = Matrix::from_rows(&[vec![1.0, -0.5], vec![0.1, 3e-300]]).unwrap();
        let text = write_matrix(&m);
        assert!(text.starts_with("2 2\n1.0000000000000000e0 -5.0000000000000000e-1\n"));
        assert_eq!(parse_matrix(&text).unwrap(), m);
    }

    #[test]
    fn malformed_inputs() {
        assert!(parse_matrix("").is_err());
        assert!(parse_matrix("2 2\n1 2\n").is_err());
        assert!(parse_matrix("1 2\n1 2 3\n").is_err());
        assert!(parse_matrix("1 1\nfoo\n").is_err());
        assert!(parse_matrix("1 1\nNaN\n").is_err());
    }

    #[test]
    fn vector_forms() {
        assert_eq!(parse_vector("1,-2, 3").unwrap(), vec![1.0, -2.0, 3.0]);
        assert_eq!(parse_vector("3 1\n1\n2\n3\n").unwrap(), vec![1.0, 2.0, 3.0]);
    }

    proptest! {
        #[test]
        fn round_trip_bit_exact(rows in 1usize..5, cols in 1usize..5,
                                bits in proptest::collection::vec(any::<u64>(), 25)) {
            let data: Vec<f64> = bits.iter().take(rows * cols)
                .map(|b| f64::from_bits(*b))
                .map(|v| if v.is_finite() { v } else { 0.5 })
                .collect();
            let m = Matrix::from_vec(rows, cols, data).unwrap();
            let back = parse_matrix(&write_matrix(&m)).unwrap();
            for (a, b) in m.as_slice().iter().zip(back.as_slice()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
