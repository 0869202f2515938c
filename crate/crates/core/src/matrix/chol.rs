//! Dense Cholesky factorization, rank-1 update/downdate and whitening.

use nalgebra::DMatrix;
#[cfg(test)]
use nalgebra::DVector;

use super::{symmetrize, DenseSymMatrix, MatrixHandle};
use crate::error::{Error, Result};

/// Upper-triangular `R` with positive diagonal such that `RᵀR = S`.
#[derive(Clone, Debug, PartialEq)]
pub struct CholFactor {
    r: DMatrix<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Update,
    Downdate,
}

pub fn cholesky(s: &DenseSymMatrix) -> Result<CholFactor> {
    CholFactor::factor(s.as_matrix())
}

impl CholFactor {
    /// Factors the symmetric matrix `s` (only the upper triangle is read).
    ///
    /// A pivot `≤ n·ε·max(diag)` is reported as not positive definite.
    pub fn factor(s: &DMatrix<f64>) -> Result<Self> {
        let n = s.nrows();
        if s.ncols() != n {
            return Err(Error::Dimension("cholesky needs a square matrix".into()));
        }
        let max_diag = (0..n).map(|i| s[(i, i)]).fold(0.0f64, f64::max);
        let thr = crate::zero_threshold(n, max_diag);
        let mut r = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut pivot = s[(j, j)];
            for k in 0..j {
                pivot -= r[(k, j)] * r[(k, j)];
            }
            if !(pivot > thr) {
                return Err(Error::NotPositiveDefinite { column: j, pivot });
            }
            let rjj = pivot.sqrt();
            r[(j, j)] = rjj;
            for i in j + 1..n {
                let mut v = s[(j, i)];
                for k in 0..j {
                    v -= r[(k, j)] * r[(k, i)];
                }
                r[(j, i)] = v / rjj;
            }
        }
        Ok(Self { r })
    }

    pub fn from_upper(r: DMatrix<f64>) -> Self {
        Self { r }
    }

    pub fn n(&self) -> usize {
        self.r.nrows()
    }

    pub fn upper(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// `RᵀR`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.r.transpose() * &self.r
    }

    /// `log det(RᵀR)`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n()).map(|i| self.r[(i, i)].ln()).sum::<f64>()
    }

    /// Solves `RᵀR X = B`.
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let y = self
            .r
            .tr_solve_upper_triangular(b)
            .expect("cholesky factor has a positive diagonal");
        self.r
            .solve_upper_triangular(&y)
            .expect("cholesky factor has a positive diagonal")
    }

    /// Solves `Rᵀ X = B`.
    pub fn solve_transposed(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.r
            .tr_solve_upper_triangular(b)
            .expect("cholesky factor has a positive diagonal")
    }

    /// `(RᵀR)⁻¹`.
    pub fn inverse(&self) -> DMatrix<f64> {
        let mut inv = self.solve(&DMatrix::identity(self.n(), self.n()));
        symmetrize(&mut inv);
        inv
    }

    /// In-place factor of `RᵀR ± vvᵀ` in `O(n²)`.
    ///
    /// On a downdate breakdown the factor is left unchanged.
    pub fn rank1_modify(&mut self, v: &[f64], direction: Direction) -> Result<()> {
        let n = self.n();
        assert_eq!(v.len(), n, "rank-1 vector has the wrong length");
        let sign = match direction {
            Direction::Update => 1.0,
            Direction::Downdate => -1.0,
        };
        let mut r = self.r.clone();
        let mut w = v.to_vec();
        for k in 0..n {
            let rkk = r[(k, k)];
            let arg = rkk * rkk + sign * w[k] * w[k];
            if !(arg > 0.0) {
                return Err(Error::DowndateFailure { row: k });
            }
            let hyp = arg.sqrt();
            let c = hyp / rkk;
            let s = w[k] / rkk;
            r[(k, k)] = hyp;
            for j in k + 1..n {
                let rkj = (r[(k, j)] + sign * s * w[j]) / c;
                r[(k, j)] = rkj;
                w[j] = c * w[j] - s * rkj;
            }
        }
        self.r = r;
        Ok(())
    }
}

pub fn chol_rank1_modify(r: &CholFactor, v: &[f64], direction: Direction) -> Result<CholFactor> {
    let mut out = r.clone();
    out.rank1_modify(v, direction)?;
    Ok(out)
}

/// `E = T_B⁻ᵀ A T_B⁻¹` where `B = T_BᵀT_B`, by two triangular solves.
pub fn whiten(a: &MatrixHandle, b: &DenseSymMatrix) -> Result<DenseSymMatrix> {
    if a.n() != b.n() {
        return Err(Error::Dimension(format!(
            "whiten: A is {} but B is {}",
            a.n(),
            b.n()
        )));
    }
    let tb = cholesky(b)?;
    let dense = a.to_dense();
    // X = T_B⁻ᵀ A, then E = (T_B⁻ᵀ Xᵀ)ᵀ
    let x = tb.solve_transposed(dense.as_matrix());
    let e = tb.solve_transposed(&x.transpose()).transpose();
    DenseSymMatrix::from_matrix(e)
}

#[cfg(test)]
pub(crate) fn dvec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sym(n: usize, data: &[f64]) -> DenseSymMatrix {
        DenseSymMatrix::from_row_slice(n, data).unwrap()
    }

    #[test]
    fn two_by_two() {
        let f = cholesky(&sym(2, &[4.0, 2.0, 2.0, 2.0])).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 1.0]);
        assert_relative_eq!(*f.upper(), expect, epsilon = 1e-15);
        let id = cholesky(&DenseSymMatrix::identity(3)).unwrap();
        assert_eq!(*id.upper(), DMatrix::identity(3, 3));
    }

    #[test]
    fn indefinite_reports_column() {
        let err = cholesky(&sym(2, &[1.0, 2.0, 2.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { column: 1, .. }));
    }

    #[test]
    fn rank1_examples() {
        let id = cholesky(&DenseSymMatrix::identity(2)).unwrap();
        let up = chol_rank1_modify(&id, &[1.0, 0.0], Direction::Update).unwrap();
        assert_relative_eq!(up.upper()[(0, 0)], 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(up.upper()[(1, 1)], 1.0, epsilon = 1e-15);
        assert_eq!(up.upper()[(0, 1)], 0.0);

        let back = chol_rank1_modify(&up, &[1.0, 0.0], Direction::Downdate).unwrap();
        assert_relative_eq!(*back.upper(), *id.upper(), epsilon = 1e-12);

        let err = chol_rank1_modify(&id, &[1.0, 0.0], Direction::Downdate).unwrap_err();
        assert!(matches!(err, Error::DowndateFailure { row: 0 }));
    }

    #[test]
    fn whiten_examples() {
        let a = MatrixHandle::from_dense(DenseSymMatrix::from_diagonal(&[4.0, 9.0]));
        let e = whiten(&a, &DenseSymMatrix::from_diagonal(&[4.0, 1.0])).unwrap();
        assert_relative_eq!(*e.as_matrix(), DMatrix::from_diagonal(&dvec(&[1.0, 9.0])), epsilon = 1e-15);

        let s = sym(3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let e = whiten(&MatrixHandle::from_dense(s.clone()), &DenseSymMatrix::identity(3)).unwrap();
        assert_relative_eq!(*e.as_matrix(), *s.as_matrix(), epsilon = 1e-15);
        let e = whiten(&MatrixHandle::from_dense(s.clone()), &s).unwrap();
        assert!((e.as_matrix() - DMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn whiten_rejects_indefinite_b() {
        let a = MatrixHandle::from_dense(DenseSymMatrix::identity(2));
        assert!(whiten(&a, &sym(2, &[1.0, 2.0, 2.0, 1.0])).is_err());
    }
}
