use super::matrix::{axpy, dot, norm2, Matrix};
use crate::error::{Error, Result};

/// Default relative drop tolerance for [`orthonormalize`].
pub const DEFAULT_DROP_TOL: f64 = 1e-10;

/// Result of orthonormalizing a set of vectors.
#[derive(Debug, Clone)]
pub struct Orthonormalized {
    /// Orthonormal columns spanning the input.
    pub basis: Matrix,
    /// Number of input vectors dropped as linearly dependent.
    pub dropped: usize,
}

/// Modified Gram–Schmidt with a second re-orthogonalization pass.
///
/// A vector is dropped when its residual after both passes is below
/// `tol * max input norm`.
pub fn orthonormalize(vectors: &[Vec<f64>], tol: f64) -> Result<Orthonormalized> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::usage("orthonormalize: empty input"))?;
    let d = first.len();
    if vectors.iter().any(|v| v.len() != d) {
        return Err(Error::usage("orthonormalize: vectors have different lengths"));
    }
    if vectors.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::numeric("orthonormalize: non-finite input"));
    }
    let scale = vectors.iter().map(|v| norm2(v)).fold(0.0, f64::max);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut dropped = 0;
    for v in vectors {
        let mut w = v.clone();
        for _pass in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                axpy(-c, q, &mut w);
            }
        }
        let r = norm2(&w);
        if r <= tol * scale || r == 0.0 {
            dropped += 1;
            continue;
        }
        w.iter_mut().for_each(|x| *x /= r);
        basis.push(w);
    }
    let basis = if basis.is_empty() {
        Matrix::zeros(d, 0)
    } else {
        Matrix::from_columns(&basis)?
    };
    Ok(Orthonormalized { basis, dropped })
}

/// Largest entry of `|BᵀB - I|`.
pub fn orthonormality_defect(basis: &Matrix) -> f64 {
    let k = basis.cols();
    let cols = basis.columns();
    let mut worst: f64 = 0.0;
    for i in 0..k {
        for j in i..k {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot(&cols[i], &cols[j]) - target).abs());
        }
    }
    worst
}

pub fn check_orthonormal(basis: &Matrix, tol: f64) -> Result<()> {
    let defect = orthonormality_defect(basis);
    if defect > tol {
        return Err(Error::usage(format!(
            "basis is not orthonormal (Gram defect {defect:.3e} > {tol:.0e})"
        )));
    }
    Ok(())
}

/// Orthogonal projection `B Bᵀ x` onto the span of an orthonormal basis.
pub fn orth_project(basis: &Matrix, x: &[f64]) -> Result<Vec<f64>> {
    if basis.rows() != x.len() {
        return Err(Error::usage(format!(
            "orth_project: basis has {} rows but x has length {}",
            basis.rows(),
            x.len()
        )));
    }
    check_orthonormal(basis, 1e-10)?;
    Ok(project_unchecked(basis, x))
}

pub(crate) fn project_unchecked(basis: &Matrix, x: &[f64]) -> Vec<f64> {
    let coeffs = basis.t_matvec(x);
    basis.matvec(&coeffs)
}

/// Orthogonal projection matrix `B Bᵀ`.
pub fn projection_matrix(basis: &Matrix) -> Matrix {
    basis.matmul(&basis.transpose())
}

/// `(Id - B Bᵀ)` for an orthonormal `B` with `rows` rows.
pub fn complement_projection_matrix(basis: &Matrix) -> Matrix {
    let n = basis.rows();
    Matrix::identity(n).sub(&projection_matrix(basis))
}

/// Orthonormal basis of the orthogonal complement of the span of `basis`.
pub fn orthogonal_complement(basis: &Matrix) -> Matrix {
    let n = basis.rows();
    let mut u = Matrix::zeros(n, n);
    let mut valid = vec![false; n];
    for j in 0..basis.cols() {
        u.set_col(j, &basis.col(j));
        valid[j] = true;
    }
    complete_orthonormal_columns(&mut u, &valid);
    u.select_columns(&(basis.cols()..n).collect::<Vec<_>>())
}

/// Fills the columns of `u` not marked valid with unit vectors orthogonal to
/// every other column, drawing candidates from the standard basis.
pub(crate) fn complete_orthonormal_columns(u: &mut Matrix, valid: &[bool]) {
    let rows = u.rows();
    let mut kept: Vec<Vec<f64>> = (0..u.cols()).filter(|&j| valid[j]).map(|j| u.col(j)).collect();
    let mut candidate = 0;
    for j in 0..u.cols() {
        if valid[j] {
            continue;
        }
        loop {
            assert!(candidate < rows, "cannot complete an orthonormal basis");
            let mut w = vec![0.0; rows];
            w[candidate] = 1.0;
            candidate += 1;
            for _pass in 0..2 {
                for q in &kept {
                    let c = dot(q, &w);
                    axpy(-c, q, &mut w);
                }
            }
            let r = norm2(&w);
            if r > 1e-3 {
                w.iter_mut().for_each(|x| *x /= r);
                u.set_col(j, &w);
                kept.push(w);
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{gaussian_matrix, gaussian_vector, SeedSpec};

    #[test]
    fn two_vectors_in_plane() {
        let r = orthonormalize(&[vec![1.0, 0.0], vec![1.0, 1.0]], DEFAULT_DROP_TOL).unwrap();
        assert_eq!(r.dropped, 0);
        assert!(r.basis.max_abs_diff(&Matrix::identity(2)) < 1e-15);
    }

    #[test]
    fn dependent_pair_dropped() {
        let r = orthonormalize(&[vec![1.0, 0.0], vec![2.0, 0.0]], 1e-10).unwrap();
        assert_eq!(r.basis.cols(), 1);
        assert_eq!(r.dropped, 1);
    }

    #[test]
    fn empty_input_is_usage_error() {
        assert!(matches!(orthonormalize(&[], 1e-10), Err(Error::Usage(_))));
    }

    #[test]
    fn gram_of_random_eight() {
        let m = gaussian_matrix(8, 8, 1.0, SeedSpec::new(2, 0)).unwrap();
        let r = orthonormalize(&m.columns(), DEFAULT_DROP_TOL).unwrap();
        assert_eq!(r.basis.cols(), 8);
        assert!(orthonormality_defect(&r.basis) <= 1e-12);
    }

    #[test]
    fn projection_examples() {
        let e1 = Matrix::from_columns(&[vec![1.0, 0.0]]).unwrap();
        assert_eq!(orth_project(&e1, &[3.0, 4.0]).unwrap(), vec![3.0, 0.0]);
        let bad = Matrix::from_columns(&[vec![2.0, 0.0]]).unwrap();
        assert!(matches!(orth_project(&bad, &[1.0, 1.0]), Err(Error::Usage(_))));
    }

    #[test]
    fn projection_idempotent_seed_3() {
        let m = gaussian_matrix(7, 3, 1.0, SeedSpec::new(3, 0)).unwrap();
        let b = orthonormalize(&m.columns(), DEFAULT_DROP_TOL).unwrap().basis;
        let x = gaussian_vector(7, 1.0, SeedSpec::new(3, 1));
        let p1 = orth_project(&b, &x).unwrap();
        let p2 = orth_project(&b, &p1).unwrap();
        for (a, c) in p1.iter().zip(&p2) {
            assert!((a - c).abs() <= 1e-12);
        }
        // a vector already in the span is unchanged
        let inside = b.matvec(&[0.3, -1.2, 2.0]);
        let p = orth_project(&b, &inside).unwrap();
        for (a, c) in inside.iter().zip(&p) {
            assert!((a - c).abs() <= 1e-12);
        }
    }

    #[test]
    fn complement_is_orthogonal() {
        let m = gaussian_matrix(6, 2, 1.0, SeedSpec::new(4, 0)).unwrap();
        let b = orthonormalize(&m.columns(), DEFAULT_DROP_TOL).unwrap().basis;
        let c = orthogonal_complement(&b);
        assert_eq!(c.cols(), 4);
        assert!(orthonormality_defect(&c) < 1e-12);
        assert!(b.transpose().matmul(&c).max_abs_diff(&Matrix::zeros(2, 4)) < 1e-12);
    }
}
