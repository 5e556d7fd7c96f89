//! Singular value decomposition by one-sided Jacobi rotations.
//!
//! The tall case (rows >= cols) orthogonalizes the columns of a working copy
//! of the matrix while accumulating the rotations into `V`. Wide matrices are
//! handled through the transpose. One-sided Jacobi computes small singular
//! values to high relative accuracy, which keeps the Gram invariants of the
//! bases testable at 1e-12.

use super::matrix::{dot, norm2, Matrix};
use super::ortho::complete_orthonormal_columns;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// Thin SVD `M = U diag(S) Vᵀ` with `min(rows, cols)` singular triples.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub left_basis: Matrix,
    pub singular_values: Vec<f64>,
    pub right_basis: Matrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Matrix {
        let u = &self.left_basis;
        let v = &self.right_basis;
        Matrix::from_fn(u.rows(), v.rows(), |i, j| {
            self.singular_values
                .iter()
                .enumerate()
                .map(|(k, s)| u[(i, k)] * s * v[(j, k)])
                .sum()
        })
    }
}

pub fn svd(m: &Matrix) -> Result<SvdResult> {
    if !m.is_finite() {
        return Err(Error::numeric("svd: non-finite input"));
    }
    if m.rows() >= m.cols() {
        svd_tall(m)
    } else {
        let t = svd_tall(&m.transpose())?;
        Ok(SvdResult {
            left_basis: t.right_basis,
            singular_values: t.singular_values,
            right_basis: t.left_basis,
        })
    }
}

/// Singular values only, in non-increasing order.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    if !m.is_finite() {
        return Err(Error::numeric("svd: non-finite input"));
    }
    let (rows, cols, data) = if m.rows() >= m.cols() {
        (m.rows(), m.cols(), m.to_col_major())
    } else {
        (m.cols(), m.rows(), m.as_slice().to_vec())
    };
    let mut cols_data = data;
    jacobi_sweeps(&mut cols_data, rows, cols, None)?;
    let mut s: Vec<f64> = (0..cols)
        .map(|j| norm2(&cols_data[j * rows..(j + 1) * rows]))
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

fn svd_tall(m: &Matrix) -> Result<SvdResult> {
    let rows = m.rows();
    let cols = m.cols();
    // column-major working copy: column j is a[j*rows..(j+1)*rows]
    let mut a = m.to_col_major();
    let mut v = vec![0.0; cols * cols];
    for j in 0..cols {
        v[j * cols + j] = 1.0;
    }
    jacobi_sweeps(&mut a, rows, cols, Some(&mut v))?;

    let norms: Vec<f64> = (0..cols).map(|j| norm2(&a[j * rows..(j + 1) * rows])).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]).then(x.cmp(&y)));

    let smax = norms.iter().cloned().fold(0.0, f64::max);
    let cutoff = smax * 1e-13 * (rows.max(cols) as f64);
    let mut u = Matrix::zeros(rows, cols);
    let mut vm = Matrix::zeros(cols, cols);
    let mut s = Vec::with_capacity(cols);
    let mut valid = Vec::with_capacity(cols);
    for (k, &j) in order.iter().enumerate() {
        let sigma = norms[j];
        s.push(sigma);
        for i in 0..cols {
            vm[(i, k)] = v[j * cols + i];
        }
        if sigma > cutoff && sigma > 0.0 {
            for i in 0..rows {
                u[(i, k)] = a[j * rows + i] / sigma;
            }
            valid.push(true);
        } else {
            valid.push(false);
        }
    }
    if valid.iter().any(|ok| !ok) {
        complete_orthonormal_columns(&mut u, &valid);
    }
    Ok(SvdResult {
        left_basis: u,
        singular_values: s,
        right_basis: vm,
    })
}

/// Cyclic one-sided Jacobi on the columns of `a` (column-major, `rows` x `cols`).
fn jacobi_sweeps(a: &mut [f64], rows: usize, cols: usize, mut v: Option<&mut Vec<f64>>) -> Result<()> {
    // the computed inner product carries rounding error of order rows·eps
    let tol = f64::EPSILON * rows.max(2) as f64;
    let mut sq: Vec<f64> = (0..cols)
        .map(|j| {
            let c = &a[j * rows..(j + 1) * rows];
            dot(c, c)
        })
        .collect();
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = sq[p];
                let beta = sq[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let (cp, cq) = column_pair(a, rows, p, q);
                let gamma = dot(cp, cq);
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(a, rows, p, q, c, s);
                if let Some(v) = v.as_deref_mut() {
                    rotate(v, cols, p, q, c, s);
                }
                let cp = &a[p * rows..(p + 1) * rows];
                let cq = &a[q * rows..(q + 1) * rows];
                sq[p] = dot(cp, cp);
                sq[q] = dot(cq, cq);
            }
        }
        if !rotated {
            return Ok(());
        }
    }
    Err(Error::numeric("svd: Jacobi sweeps did not converge"))
}

fn column_pair(a: &[f64], rows: usize, p: usize, q: usize) -> (&[f64], &[f64]) {
    (&a[p * rows..(p + 1) * rows], &a[q * rows..(q + 1) * rows])
}

fn rotate(a: &mut [f64], rows: usize, p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = a.split_at_mut(q * rows);
    let cp = &mut head[p * rows..(p + 1) * rows];
    let cq = &mut tail[..rows];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let yq = *y;
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}
