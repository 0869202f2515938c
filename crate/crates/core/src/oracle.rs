//! Brute-force references for small instances.

use itertools::Itertools;

use crate::eig::sym_eig;
use crate::error::{Error, Result};
use crate::matrix::DenseSymMatrix;

/// Largest number of subsets [`brute_force_maxvol`] will enumerate.
pub const SUBSET_GUARD: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct MaxvolOptimum {
    pub j: Vec<usize>,
    pub volume: f64,
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Exhaustive maximum of `det A(J,J)` over all `|J| = r`.
///
/// Ties go to the lexicographically smallest `J`.
pub fn brute_force_maxvol(a: &DenseSymMatrix, r: usize) -> Result<MaxvolOptimum> {
    let n = a.n();
    if r > n {
        return Err(Error::Parameter(format!("r = {r} exceeds n = {n}")));
    }
    let count = binomial(n, r);
    if count > SUBSET_GUARD {
        return Err(Error::CombinatorialGuard {
            count,
            limit: SUBSET_GUARD,
        });
    }
    let mut best = MaxvolOptimum {
        j: (0..r).collect(),
        volume: f64::NEG_INFINITY,
    };
    for j in (0..n).combinations(r) {
        let v = a.principal(&j).into_matrix().determinant().abs();
        if v > best.volume {
            best = MaxvolOptimum { j, volume: v };
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    Nuclear,
    Frobenius,
    Spectral,
}

/// Error of the best rank-`r` approximation of `a` in the given norm.
pub fn tsvd_error(a: &DenseSymMatrix, r: usize, norm: Norm) -> f64 {
    let sv = singular_values(a);
    tail_functional(&sv, r, norm)
}

/// Singular values of a symmetric matrix in descending order.
pub fn singular_values(a: &DenseSymMatrix) -> Vec<f64> {
    let mut sv: Vec<f64> = sym_eig(a).values.iter().map(|v| v.abs()).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

pub(crate) fn tail_functional(sv: &[f64], r: usize, norm: Norm) -> f64 {
    let tail = sv.get(r..).unwrap_or(&[]);
    match norm {
        Norm::Nuclear => tail.iter().sum(),
        Norm::Frobenius => tail.iter().map(|s| s * s).sum::<f64>().sqrt(),
        Norm::Spectral => tail.first().copied().unwrap_or(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{make_test_matrix, TestMatrix};

    #[test]
    fn maxvol_examples() {
        let h = make_test_matrix(TestMatrix::A3, 4, None).unwrap().to_dense();
        let best = brute_force_maxvol(&h, 2).unwrap();
        assert_eq!(best.j, vec![0, 2]);
        assert!((best.volume - (1.0 / 5.0 - 1.0 / 9.0)).abs() < 1e-15);

        let best = brute_force_maxvol(&DenseSymMatrix::from_diagonal(&[1.0, 2.0, 3.0]), 2).unwrap();
        assert_eq!(best.j, vec![1, 2]);
        assert!((best.volume - 6.0).abs() < 1e-14);

        let best = brute_force_maxvol(&DenseSymMatrix::identity(3), 2).unwrap();
        assert_eq!(best.j, vec![0, 1]);
        assert_eq!(best.volume, 1.0);
    }

    #[test]
    fn guard_refuses_large_enumerations() {
        let a = DenseSymMatrix::identity(60);
        let err = brute_force_maxvol(&a, 10).unwrap_err();
        assert!(matches!(err, Error::CombinatorialGuard { count, .. } if count == binomial(60, 10)));
    }

    #[test]
    fn tsvd_examples() {
        let d = DenseSymMatrix::from_diagonal(&[3.0, 2.0, 1.0]);
        assert_eq!(tsvd_error(&d, 1, Norm::Nuclear), 3.0);
        assert_eq!(tsvd_error(&d, 1, Norm::Spectral), 2.0);
        assert!((tsvd_error(&d, 1, Norm::Frobenius) - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(tsvd_error(&d, 3, Norm::Nuclear), 0.0);
        assert_eq!(tsvd_error(&d, 5, Norm::Spectral), 0.0);

        let h = make_test_matrix(TestMatrix::A3, 8, None).unwrap().to_dense();
        let vals = sym_eig(&h).values;
        assert!((tsvd_error(&h, 3, Norm::Spectral) - vals[4]).abs() < 1e-15);
    }
}
