//! Dense real linear algebra: matrices, SVD, orthonormalization and the
//! matrix text format.

mod matrix;
mod ortho;
mod svd;
pub mod text;

pub use matrix::{axpy, dot, norm1, norm2, norm_inf, Matrix};
pub use ortho::{
    check_orthonormal, complement_projection_matrix, orth_project, orthogonal_complement,
    orthonormality_defect, orthonormalize, projection_matrix, Orthonormalized, DEFAULT_DROP_TOL,
};
pub use svd::{singular_values, svd, SvdResult};
