use std::path::PathBuf;

use spsd_cross::matrix::{make_test_matrix, read_dense_from_path};
use spsd_cross::{Error, MatrixHandle, Result, TestMatrix};

/// Loads a matrix from a file or generates a test matrix.
pub fn load(file: Option<&PathBuf>, kind: Option<TestMatrix>, n: Option<usize>, rho: Option<f64>) -> Result<MatrixHandle> {
    match (file, kind) {
        (Some(path), None) => Ok(MatrixHandle::from_dense(read_dense_from_path(path)?)),
        (None, Some(kind)) => {
            let n = n.ok_or_else(|| Error::Parameter("--n is required with --kind".into()))?;
            make_test_matrix(kind, n, rho)
        }
        (Some(_), Some(_)) => Err(Error::Parameter("give either a matrix file or a kind, not both".into())),
        (None, None) => Err(Error::Parameter("a matrix file or a kind is required".into())),
    }
}
