//! Maximum-volume principal submatrix selection and certified cross
//! approximation for symmetric positive semidefinite matrices.
//!
//! * [`greedy`]: adaptive cross approximation with diagonal pivoting and its
//!   ratio-of-volumes variant.
//! * [`local_search`]: single-index swap refinement of a pivot set until no
//!   swap increases the volume by more than a factor `1 + tol`.
//! * [`certified`]: cross approximations whose nuclear-norm error is within
//!   `r + 1` times the best rank-`r` error, selected by the method of
//!   conditional expectations.
//! * [`eig`]: the eigenvalue kernels behind the certified methods.
//! * [`matrix`]: matrix handles, test matrices and dense SPSD kernels.
//! * [`oracle`]: brute-force references used by tests and benchmarks.

pub mod certified;
pub mod eig;
pub mod error;
pub mod greedy;
pub mod local_search;
pub mod matrix;
pub mod oracle;

pub use error::{Error, Result};
pub use matrix::{DenseSymMatrix, MatrixHandle, TestMatrix};

/// Default swap tolerance of the local volume maximization.
pub const DEFAULT_TOL: f64 = 5e-2;

/// Default block rank of the restarted certified cross approximation.
pub const DEFAULT_RBAR: usize = 5;

/// Pivots at or below this value are treated as zero.
pub(crate) fn zero_threshold(n: usize, max_diag: f64) -> f64 {
    n as f64 * f64::EPSILON * max_diag.max(0.0)
}
