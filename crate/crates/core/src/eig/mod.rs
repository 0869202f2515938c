//! Symmetric eigenvalue kernels.
//!
//! The certified cross approximation needs, for every pivot candidate, the
//! spectrum of a residual after a rank-1 downdate. With `R = QΛQᵀ` known this
//! is the spectrum of `Λ - ũũᵀ`, which [`tridiagonalize_dpr1`] reduces to a
//! symmetric tridiagonal matrix by bulge chasing and [`tridiag_eig`] solves by
//! divide and conquer. [`charpoly_from_eigs`] then accumulates the elementary
//! symmetric polynomials of the eigenvalues.

mod cuppen;
mod dpr1;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::matrix::DenseSymMatrix;

pub use cuppen::tridiag_eig;
pub use dpr1::tridiagonalize_dpr1;

/// Symmetric tridiagonal matrix: diagonal `d` and off-diagonal `e`.
#[derive(Clone, Debug, PartialEq)]
pub struct TridiagSym {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
}

impl TridiagSym {
    pub fn new(d: Vec<f64>, e: Vec<f64>) -> Self {
        assert!(
            e.len() + 1 == d.len() || (d.is_empty() && e.is_empty()),
            "off-diagonal must have length n - 1"
        );
        Self { d, e }
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.d));
        for (i, &v) in self.e.iter().enumerate() {
            m[(i, i + 1)] = v;
            m[(i + 1, i)] = v;
        }
        debug_assert_eq!(m.nrows(), n);
        m
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct SymEig {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn sym_eig(s: &DenseSymMatrix) -> SymEig {
    sym_eig_matrix(s.as_matrix())
}

pub(crate) fn sym_eig_matrix(m: &DMatrix<f64>) -> SymEig {
    let n = m.nrows();
    if n == 0 {
        return SymEig {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
        };
    }
    let se = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, k| se.eigenvectors[(i, order[k])]);
    SymEig { values, vectors }
}

/// Elementary symmetric polynomials `e[0..=n]` of `n` eigenvalues, `e[0] = 1`.
///
/// `e[k]` is the sign-free characteristic polynomial coefficient: the
/// coefficient of `z^(n-k)` in `det(zI - A)` is `(-1)^k e[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CharPolyCoeffs {
    pub e: Vec<f64>,
}

impl CharPolyCoeffs {
    pub fn degree(&self) -> usize {
        self.e.len() - 1
    }
}

/// Accumulates the coefficients one eigenvalue at a time,
/// `e_k ← e_k + λ e_{k-1}`. No subtraction happens for nonnegative input.
pub fn charpoly_from_eigs(eigenvalues: &[f64]) -> CharPolyCoeffs {
    CharPolyCoeffs {
        e: elementary_symmetric(eigenvalues, eigenvalues.len()),
    }
}

/// The first `kmax + 1` elementary symmetric polynomials.
pub fn elementary_symmetric(values: &[f64], kmax: usize) -> Vec<f64> {
    let kmax = kmax.min(values.len());
    let mut e = vec![0.0; kmax + 1];
    e[0] = 1.0;
    for (m, &lam) in values.iter().enumerate() {
        let top = (m + 1).min(kmax);
        for k in (1..=top).rev() {
            e[k] += lam * e[k - 1];
        }
    }
    e
}
