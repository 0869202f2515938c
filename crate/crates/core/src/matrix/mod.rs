//! Matrix abstractions shared by all selection algorithms.

mod chol;
mod generators;
mod io;
mod norms;

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use chol::{cholesky, chol_rank1_modify, whiten, CholFactor, Direction};
pub use generators::{make_test_matrix, TestMatrix};
pub use io::{read_dense, read_dense_from_path, write_dense, write_dense_to_path};
pub use norms::{residual_matrix, residual_norms, ResidualNorms};

/// Dense symmetric matrix, exactly symmetric by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseSymMatrix {
    inner: DMatrix<f64>,
}

impl DenseSymMatrix {
    /// Symmetrizes `m` as `(m + mᵀ) / 2`.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let mut inner = m;
        symmetrize(&mut inner);
        Ok(Self { inner })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut inner = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let v = f(i, j);
                inner[(i, j)] = v;
                inner[(j, i)] = v;
            }
        }
        Self { inner }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self {
            inner: DMatrix::from_diagonal(&DVector::from_column_slice(d)),
        }
    }

    /// Row-major construction; the input is symmetrized.
    pub fn from_row_slice(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dimension(format!(
                "expected {} entries, got {}",
                n * n,
                data.len()
            )));
        }
        Self::from_matrix(DMatrix::from_row_slice(n, n, data))
    }

    pub fn n(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.inner[(i, i)]).collect()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.inner
    }

    /// Principal submatrix `S(idx, idx)`.
    pub fn principal(&self, idx: &[usize]) -> DenseSymMatrix {
        let k = idx.len();
        let inner = DMatrix::from_fn(k, k, |a, b| self.inner[(idx[a], idx[b])]);
        Self { inner }
    }

    pub fn trace(&self) -> f64 {
        self.inner.trace()
    }
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

type EntryFn = dyn Fn(usize, usize) -> f64 + Send + Sync;

#[derive(Clone)]
enum Source {
    Dense(Arc<DenseSymMatrix>),
    Lazy(Arc<EntryFn>),
}

/// Entry oracle for a symmetric matrix that is either stored densely or
/// evaluated on demand.
///
/// Every entry read goes through the oracle and is counted, so the number of
/// evaluations a selection algorithm performs can be reported.
pub struct MatrixHandle {
    n: usize,
    source: Source,
    evals: AtomicU64,
}

impl Clone for MatrixHandle {
    /// The clone shares the entries but starts a fresh evaluation counter.
    fn clone(&self) -> Self {
        Self {
            n: self.n,
            source: self.source.clone(),
            evals: AtomicU64::new(0),
        }
    }
}

impl fmt::Debug for MatrixHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixHandle")
            .field("n", &self.n)
            .field("explicit", &self.is_explicit())
            .field("evaluations", &self.evaluations())
            .finish()
    }
}

impl From<DenseSymMatrix> for MatrixHandle {
    fn from(m: DenseSymMatrix) -> Self {
        Self::from_dense(m)
    }
}

impl MatrixHandle {
    pub fn from_dense(m: DenseSymMatrix) -> Self {
        Self {
            n: m.n(),
            source: Source::Dense(Arc::new(m)),
            evals: AtomicU64::new(0),
        }
    }

    /// Lazy handle. `f` must be symmetric in its arguments (0-based indices).
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            n,
            source: Source::Lazy(Arc::new(f)),
            evals: AtomicU64::new(0),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_explicit(&self) -> bool {
        matches!(self.source, Source::Dense(_))
    }

    /// Dense storage, when the handle has one.
    pub fn dense(&self) -> Option<&DenseSymMatrix> {
        match &self.source {
            Source::Dense(m) => Some(m),
            Source::Lazy(_) => None,
        }
    }

    #[inline]
    fn raw(&self, i: usize, j: usize) -> f64 {
        match &self.source {
            Source::Dense(m) => m.get(i, j),
            Source::Lazy(f) => f(i, j),
        }
    }

    fn count(&self, k: u64) {
        self.evals.fetch_add(k, Ordering::Relaxed);
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.count(1);
        self.raw(i, j)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.count(self.n as u64);
        (0..self.n).map(|i| self.raw(i, i)).collect()
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.count(self.n as u64);
        DVector::from_fn(self.n, |i, _| self.raw(i, j))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "matvec dimension mismatch");
        match &self.source {
            Source::Dense(m) => {
                self.count((self.n * self.n) as u64);
                let y = m.as_matrix() * DVector::from_column_slice(x);
                y.as_slice().to_vec()
            }
            Source::Lazy(_) => {
                self.count((self.n * self.n) as u64);
                (0..self.n)
                    .map(|i| (0..self.n).map(|j| self.raw(i, j) * x[j]).sum())
                    .collect()
            }
        }
    }

    /// Dense realization (counts `n²` evaluations).
    pub fn to_dense(&self) -> DenseSymMatrix {
        self.count((self.n * self.n) as u64);
        match &self.source {
            Source::Dense(m) => (**m).clone(),
            Source::Lazy(_) => DenseSymMatrix::from_fn(self.n, |i, j| self.raw(i, j)),
        }
    }

    /// Number of entry evaluations since construction or the last reset.
    pub fn evaluations(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    pub fn reset_evaluations(&self) {
        self.evals.store(0, Ordering::Relaxed);
    }
}

/// Checks that `idx` holds distinct indices below `n`.
pub(crate) fn check_index_set(idx: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &j in idx {
        if j >= n {
            return Err(Error::Dimension(format!("index {j} out of range for n = {n}")));
        }
        if std::mem::replace(&mut seen[j], true) {
            return Err(Error::Parameter(format!("duplicate index {j}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_ingest_symmetrizes() {
        let m = DenseSymMatrix::from_row_slice(2, &[1.0, 2.0, 4.0, 3.0]).unwrap();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 3.0);
    }

    #[test]
    fn non_square_is_rejected() {
        let err = DenseSymMatrix::from_matrix(DMatrix::zeros(2, 3)).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn handle_counts_evaluations() {
        let h = MatrixHandle::from_fn(5, |i, j| (i.min(j) + 1) as f64);
        assert_eq!(h.entry(1, 2), 2.0);
        let _ = h.diagonal();
        let _ = h.column(3);
        assert_eq!(h.evaluations(), 1 + 5 + 5);
        h.reset_evaluations();
        assert_eq!(h.evaluations(), 0);
        assert!(!h.is_explicit());
    }

    #[test]
    fn matvec_matches_rows() {
        let h = MatrixHandle::from_fn(4, |i, j| 1.0 / (i + j + 1) as f64);
        let x = [1.0, -2.0, 0.5, 3.0];
        let y = h.matvec(&x);
        for (i, yi) in y.iter().enumerate() {
            let expect: f64 = (0..4).map(|j| h.entry(i, j) * x[j]).sum();
            assert!((yi - expect).abs() < 1e-14);
        }
        let d = MatrixHandle::from_dense(h.to_dense());
        let yd = d.matvec(&x);
        for (a, b) in y.iter().zip(&yd) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn index_set_validation() {
        assert!(check_index_set(&[0, 2], 3).is_ok());
        assert!(check_index_set(&[0, 3], 3).is_err());
        assert!(check_index_set(&[1, 1], 3).is_err());
    }
}
