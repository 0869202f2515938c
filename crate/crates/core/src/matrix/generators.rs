use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use super::{DenseSymMatrix, MatrixHandle};
use crate::error::{Error, Result};

/// The five benchmark matrices. Formulas use 1-based `i, j`.
///
/// * `A1`: `exp(-0.3 |i - j| / n)`
/// * `A2`: `min(i, j)`
/// * `A3`: Hilbert matrix `1 / (i + j - 1)`
/// * `A4`: `trid(1,1,1) ⊗ Id₆ + Id ⊗ trid(-0.34, 1.7, -0.34)`, banded SPD
/// * `A5`: `Q diag(rho^(i-1)) Qᵀ` with `Q` the sine eigenbasis of `trid(-1,2,-1)`
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TestMatrix {
    A1,
    A2,
    A3,
    A4,
    A5,
}

impl TestMatrix {
    pub const ALL: [TestMatrix; 5] = [Self::A1, Self::A2, Self::A3, Self::A4, Self::A5];
}

impl fmt::Display for TestMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::A1 => "A1",
            Self::A2 => "A2",
            Self::A3 => "A3",
            Self::A4 => "A4",
            Self::A5 => "A5",
        };
        f.write_str(s)
    }
}

impl FromStr for TestMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A1" => Ok(Self::A1),
            "A2" => Ok(Self::A2),
            "A3" => Ok(Self::A3),
            "A4" => Ok(Self::A4),
            "A5" => Ok(Self::A5),
            other => Err(Error::Parameter(format!("unknown test matrix '{other}'"))),
        }
    }
}

const A4_BLOCK: usize = 6;

pub fn make_test_matrix(kind: TestMatrix, n: usize, rho: Option<f64>) -> Result<MatrixHandle> {
    if n == 0 {
        return Err(Error::Dimension("n must be positive".into()));
    }
    let nf = n as f64;
    let handle = match kind {
        TestMatrix::A1 => MatrixHandle::from_fn(n, move |i, j| {
            (-0.3 * (i as f64 - j as f64).abs() / nf).exp()
        }),
        TestMatrix::A2 => MatrixHandle::from_fn(n, |i, j| (i.min(j) + 1) as f64),
        TestMatrix::A3 => MatrixHandle::from_fn(n, |i, j| 1.0 / (i + j + 1) as f64),
        TestMatrix::A4 => {
            if n % A4_BLOCK != 0 {
                return Err(Error::Dimension(format!(
                    "A4 needs n divisible by {A4_BLOCK}, got {n}"
                )));
            }
            MatrixHandle::from_fn(n, a4_entry)
        }
        TestMatrix::A5 => {
            let rho = rho.ok_or_else(|| Error::Parameter("A5 requires rho".into()))?;
            if !(rho > 0.0 && rho < 1.0) {
                return Err(Error::Parameter(format!("rho must lie in (0, 1), got {rho}")));
            }
            MatrixHandle::from_dense(a5_dense(n, rho))
        }
    };
    Ok(handle)
}

fn a4_entry(i: usize, j: usize) -> f64 {
    let (p, a) = (i / A4_BLOCK, i % A4_BLOCK);
    let (q, b) = (j / A4_BLOCK, j % A4_BLOCK);
    let mut v = 0.0;
    // trid(1,1,1) ⊗ Id₆
    if a == b && p.abs_diff(q) <= 1 {
        v += 1.0;
    }
    // Id ⊗ trid(-0.34, 1.7, -0.34)
    if p == q {
        v += match a.abs_diff(b) {
            0 => 1.7,
            1 => -0.34,
            _ => 0.0,
        };
    }
    v
}

fn a5_dense(n: usize, rho: f64) -> DenseSymMatrix {
    let scale = (2.0 / (n as f64 + 1.0)).sqrt();
    let h = PI / (n as f64 + 1.0);
    // column k (0-based) is the eigenvector for the (k+1)-th smallest eigenvalue
    let q = DMatrix::from_fn(n, n, |j, k| scale * (((j + 1) * (k + 1)) as f64 * h).sin());
    let mut qd = q.clone();
    let mut w = 1.0;
    for k in 0..n {
        qd.column_mut(k).scale_mut(w);
        w *= rho;
    }
    DenseSymMatrix::from_matrix(qd * q.transpose()).expect("square by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printed_entries() {
        let a1 = make_test_matrix(TestMatrix::A1, 10, None).unwrap();
        assert_eq!(a1.entry(0, 0), 1.0);
        assert!((a1.entry(0, 9) - (-0.3f64 * 9.0 / 10.0).exp()).abs() < 1e-15);
        let a2 = make_test_matrix(TestMatrix::A2, 5, None).unwrap();
        // 1-based (2, 3) -> min = 2
        assert_eq!(a2.entry(1, 2), 2.0);
        let a3 = make_test_matrix(TestMatrix::A3, 4, None).unwrap();
        assert!((a3.entry(1, 1) - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn a4_structure() {
        let a4 = make_test_matrix(TestMatrix::A4, 12, None).unwrap();
        assert_eq!(a4.entry(0, 0), 2.7);
        assert_eq!(a4.entry(0, 1), -0.34);
        assert_eq!(a4.entry(0, 6), 1.0);
        assert_eq!(a4.entry(0, 7), 0.0);
        assert_eq!(a4.entry(5, 6), 0.0);
        assert!(crate::matrix::cholesky(&a4.to_dense()).is_ok());
    }

    #[test]
    fn a5_spectrum() {
        let a5 = make_test_matrix(TestMatrix::A5, 20, Some(0.5)).unwrap();
        assert!(a5.is_explicit());
        let eig = crate::eig::sym_eig(&a5.to_dense());
        let mut expect: Vec<f64> = (0..20).map(|k| 0.5f64.powi(k)).collect();
        expect.reverse();
        for (got, want) in eig.values.iter().zip(&expect) {
            assert!((got - want).abs() < 1e-13, "{got} vs {want}");
        }
    }

    #[test]
    fn precondition_errors() {
        assert!(matches!(
            make_test_matrix(TestMatrix::A4, 10, None),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            make_test_matrix(TestMatrix::A5, 10, None),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            make_test_matrix(TestMatrix::A5, 10, Some(1.0)),
            Err(Error::Parameter(_))
        ));
        assert!("a3".parse::<TestMatrix>().is_ok());
        assert!("A6".parse::<TestMatrix>().is_err());
    }

    #[test]
    fn lazy_handles_are_symmetric() {
        for kind in [TestMatrix::A1, TestMatrix::A2, TestMatrix::A3, TestMatrix::A4] {
            let h = make_test_matrix(kind, 18, None).unwrap();
            for i in 0..18 {
                for j in 0..18 {
                    assert_eq!(h.entry(i, j), h.entry(j, i), "{kind} ({i},{j})");
                }
            }
        }
    }
}
