//! Traces of powers of rank-1 downdated residuals and the characteristic
//! polynomial coefficient ratios they determine.

use nalgebra::DMatrix;

use crate::eig::sym_eig_matrix;
use crate::error::{Error, Result};
use crate::matrix::{symmetrize, DenseSymMatrix, MatrixHandle};

/// Symmetric operator applied to blocks of vectors.
pub trait SymOperator {
    fn n(&self) -> usize;
    fn apply_block(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
}

impl SymOperator for DenseSymMatrix {
    fn n(&self) -> usize {
        DenseSymMatrix::n(self)
    }

    fn apply_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.as_matrix() * x
    }
}

impl SymOperator for MatrixHandle {
    fn n(&self) -> usize {
        MatrixHandle::n(self)
    }

    fn apply_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self.dense() {
            Some(d) => d.as_matrix() * x,
            None => self.to_dense().as_matrix() * x,
        }
    }
}

/// `A - WWᵀ` with `A` realized densely and `W` grown one column at a time.
#[derive(Clone, Debug)]
pub struct FactoredResidual {
    a: DMatrix<f64>,
    w: DMatrix<f64>,
}

impl FactoredResidual {
    pub fn new(a: &MatrixHandle) -> Self {
        let a = a.to_dense().into_matrix();
        let n = a.nrows();
        Self {
            a,
            w: DMatrix::zeros(n, 0),
        }
    }

    pub fn rank(&self) -> usize {
        self.w.ncols()
    }

    /// Subtracts `uuᵀ`.
    pub fn push(&mut self, u: &nalgebra::DVector<f64>) {
        let k = self.w.ncols();
        let w = std::mem::replace(&mut self.w, DMatrix::zeros(0, 0));
        self.w = w.insert_column(k, 0.0);
        self.w.set_column(k, u);
    }

    /// Residual columns `idx`.
    pub fn columns(&self, idx: &[usize]) -> DMatrix<f64> {
        let a = self.a.select_columns(idx);
        let wr = self.w.select_rows(idx);
        a - &self.w * wr.transpose()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.a.nrows())
            .map(|i| self.a[(i, i)] - self.w.row(i).norm_squared())
            .collect()
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let mut r = &self.a - &self.w * self.w.transpose();
        symmetrize(&mut r);
        r
    }
}

impl SymOperator for FactoredResidual {
    fn n(&self) -> usize {
        self.a.nrows()
    }

    fn apply_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        &self.a * x - &self.w * (self.w.transpose() * x)
    }
}

/// `tr(Mʲ)` for `j = 1..=m` of a dense symmetric matrix, from powers up to
/// `⌈m/2⌉` and Frobenius inner products.
pub fn power_traces(m: &DMatrix<f64>, count: usize) -> Vec<f64> {
    if count == 0 {
        return Vec::new();
    }
    let half = count.div_ceil(2);
    let mut powers = vec![m.clone()];
    for _ in 1..half {
        let next = powers.last().unwrap() * m;
        powers.push(next);
    }
    (1..=count)
        .map(|j| {
            let a = j.div_ceil(2);
            let b = j - a;
            if b == 0 {
                powers[0].trace()
            } else {
                powers[a - 1].dot(&powers[b - 1])
            }
        })
        .collect()
}

/// Traces of `(A - u uᵀ)ⁱ`, `i = 1..=k`, for every column `u` of `u_block`.
///
/// `t[i-1]` must hold `tr(Aⁱ)`. Each correction `tr((A - uuᵀ)ⁱ) - tr(Aⁱ)`
/// only involves `uᵀAᵐu` with `m < i`, so it is reproduced exactly by the
/// projection `H` of `A` onto the Krylov space `K_k(A, u)`:
///
/// ```text
/// tr((A - uuᵀ)ⁱ) = t_i + tr(H̃ⁱ) - tr(Hⁱ),   H̃ = H - ‖u‖² e₁e₁ᵀ.
/// ```
///
/// The Krylov spaces of all columns advance together, one block product per
/// Arnoldi step. Orthogonalization is classical Gram–Schmidt done twice. An
/// invariant subspace pads `H` with zeros.
pub fn update_traces<Op: SymOperator + ?Sized>(
    a: &Op,
    t: &[f64],
    u_block: &DMatrix<f64>,
    k: usize,
) -> Result<DMatrix<f64>> {
    let n = a.n();
    let s = u_block.ncols();
    if u_block.nrows() != n {
        return Err(Error::Dimension(format!(
            "candidate block has {} rows, operator is {n}",
            u_block.nrows()
        )));
    }
    if t.len() < k {
        return Err(Error::Parameter(format!("{} traces given, {k} needed", t.len())));
    }
    let mut out = DMatrix::zeros(s, k);
    if k == 0 || s == 0 {
        return Ok(out);
    }
    let norms: Vec<f64> = (0..s).map(|c| u_block.column(c).norm()).collect();
    let breakdown = n as f64 * f64::EPSILON * t[0].abs().max(f64::MIN_POSITIVE);

    let mut basis: Vec<DMatrix<f64>> = Vec::with_capacity(k);
    let mut v = u_block.clone();
    for (c, &nrm) in norms.iter().enumerate() {
        if nrm > 0.0 {
            v.column_mut(c).unscale_mut(nrm);
        }
    }
    let mut h: Vec<DMatrix<f64>> = vec![DMatrix::zeros(k, k); s];
    let mut live: Vec<bool> = norms.iter().map(|&x| x > 0.0).collect();

    for step in 0..k {
        basis.push(v.clone());
        let w = a.apply_block(&v);
        let mut next = DMatrix::zeros(n, s);
        for c in 0..s {
            if !live[c] {
                continue;
            }
            let mut wc = w.column(c).clone_owned();
            for _pass in 0..2 {
                let coefs: Vec<f64> = basis.iter().map(|q| q.column(c).dot(&wc)).collect();
                for (i, (q, &coef)) in basis.iter().zip(&coefs).enumerate() {
                    h[c][(i, step)] += coef;
                    wc.axpy(-coef, &q.column(c), 1.0);
                }
            }
            if step + 1 < k {
                let beta = wc.norm();
                if beta <= breakdown {
                    live[c] = false;
                } else {
                    h[c][(step + 1, step)] = beta;
                    next.set_column(c, &(wc / beta));
                }
            }
        }
        v = next;
    }

    for c in 0..s {
        let mut hc = h[c].clone();
        symmetrize(&mut hc);
        let mut ht = hc.clone();
        ht[(0, 0)] -= norms[c] * norms[c];
        let mu = sym_eig_matrix(&hc).values;
        let nu = sym_eig_matrix(&ht).values;
        let mut pm = mu.clone();
        let mut pn = nu.clone();
        for i in 0..k {
            let tr_h: f64 = pm.iter().sum();
            let tr_ht: f64 = pn.iter().sum();
            out[(c, i)] = t[i] + (tr_ht - tr_h);
            pm.iter_mut().zip(&mu).for_each(|(p, m)| *p *= m);
            pn.iter_mut().zip(&nu).for_each(|(p, m)| *p *= m);
        }
    }
    Ok(out)
}

/// Coefficient ratio `e_{k+1} / e_k` together with the 1-norm condition
/// number of the power-sum matrix it was obtained from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoeffRatio {
    pub ratio: f64,
    pub condition: f64,
    pub reliable: bool,
}

/// Condition numbers above this make a ratio unreliable.
pub fn condition_limit() -> f64 {
    1.0 / (100.0 * f64::EPSILON)
}

/// Lower Hessenberg power-sum matrix whose determinant is `m! e_m`:
/// `P[i][j] = p_{i-j+1}` on and below the diagonal and `P[i][i+1] = i + 1`.
fn power_sum_matrix(p: &[f64], m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |i, j| {
        if j <= i {
            p[i - j]
        } else if j == i + 1 {
            (i + 1) as f64
        } else {
            0.0
        }
    })
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `e_{k+1} / e_k` of the eigenvalues whose power sums are `t` (`t[0] = tr`),
/// never failing; see [`coeff_ratio_from_traces`].
pub fn coeff_ratio_estimate(t: &[f64], k: usize) -> CoeffRatio {
    assert!(t.len() > k, "need at least k + 1 traces");
    let scale = t[0];
    if k == 0 {
        return CoeffRatio {
            ratio: scale,
            condition: 1.0,
            reliable: true,
        };
    }
    if !(scale > 0.0) {
        return CoeffRatio {
            ratio: 0.0,
            condition: f64::INFINITY,
            reliable: false,
        };
    }
    // scaled power sums of the eigenvalues divided by t₁
    let p: Vec<f64> = t[..=k]
        .iter()
        .enumerate()
        .map(|(j, &tj)| tj / scale.powi(j as i32 + 1))
        .collect();
    let big = power_sum_matrix(&p, k + 1);
    let small = big.view((0, 0), (k, k)).clone_owned();
    let det_big = big.clone().lu().determinant();
    let det_small = small.lu().determinant();
    let condition = match big.clone().try_inverse() {
        Some(inv) => one_norm(&big) * one_norm(&inv),
        None => f64::INFINITY,
    };
    let ratio = scale * det_big / ((k + 1) as f64 * det_small);
    let reliable = det_small != 0.0 && ratio.is_finite() && condition <= condition_limit();
    CoeffRatio {
        ratio: if ratio.is_finite() { ratio } else { f64::INFINITY },
        condition,
        reliable,
    }
}

/// `e_{k+1} / e_k` of the eigenvalues whose power sums are `t[0..=k]`, by the
/// Plemelj–Smithies determinants of the Newton identities.
///
/// Fails with [`Error::UnreliableRatio`] when `e_k` vanishes or the power-sum
/// matrix is too ill conditioned for the ratio to carry any digits.
pub fn coeff_ratio_from_traces(t: &[f64], k: usize) -> Result<CoeffRatio> {
    if t.len() <= k {
        return Err(Error::Parameter(format!("{} traces given, {} needed", t.len(), k + 1)));
    }
    let est = coeff_ratio_estimate(t, k);
    if est.reliable {
        Ok(est)
    } else {
        Err(Error::UnreliableRatio {
            condition: est.condition,
        })
    }
}
