use nalgebra::DMatrix;

use super::{check_index_set, symmetrize, CholFactor, DenseSymMatrix, MatrixHandle};
use crate::eig::sym_eig;
use crate::error::{Error, Result};

/// Norms of the cross-approximation residual `A - A(:,J) A(J,J)⁻¹ A(J,:)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualNorms {
    pub nuclear: f64,
    pub frobenius: f64,
    pub spectral: f64,
    pub max_abs: f64,
}

/// Dense residual `R_J = A - A_J`.
pub fn residual_matrix(a: &MatrixHandle, j: &[usize]) -> Result<DenseSymMatrix> {
    let n = a.n();
    check_index_set(j, n)?;
    let dense = a.to_dense();
    if j.is_empty() {
        return Ok(dense);
    }
    let chol = CholFactor::factor(dense.principal(j).as_matrix())
        .map_err(|_| Error::SingularPivotBlock)?;
    let rows = DMatrix::from_fn(j.len(), n, |a, b| dense.get(j[a], b));
    // W = R⁻ᵀ A(J,:), A_J = WᵀW
    let w = chol.solve_transposed(&rows);
    let mut res = dense.as_matrix() - w.transpose() * w;
    symmetrize(&mut res);
    for &p in j {
        for i in 0..n {
            res[(p, i)] = 0.0;
            res[(i, p)] = 0.0;
        }
    }
    DenseSymMatrix::from_matrix(res)
}

pub fn residual_norms(a: &MatrixHandle, j: &[usize]) -> Result<ResidualNorms> {
    let res = residual_matrix(a, j)?;
    let eig = sym_eig(&res);
    let nuclear = eig.values.iter().map(|v| v.abs()).sum();
    let frobenius = eig.values.iter().map(|v| v * v).sum::<f64>().sqrt();
    let spectral = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let max_abs = res.as_matrix().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(ResidualNorms {
        nuclear,
        frobenius,
        spectral,
        max_abs,
    })
}
