//! Random quotients of l1^N.
//!
//! A body is the absolute convex hull of the columns of an `n x N` Gaussian
//! matrix. The crate computes its gauge, dual gauge and operator norms
//! exactly through linear programming, brackets s-numbers of operators on
//! it, searches for complemented subspaces and runs seeded Monte Carlo
//! suites over all of these.

pub mod body;
pub mod cli;
pub mod constructions;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod linprog;
pub mod sampler;
pub mod snumbers;

pub use error::{Error, Result};
