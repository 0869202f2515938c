//! Certified cross approximation.
//!
//! Some rank-`r` cross approximation of an SPSD matrix has nuclear-norm error
//! at most `(r + 1)` times the best rank-`r` error. Drawing `J` with
//! probability proportional to `det A(J,J)` attains this bound in
//! expectation, and the expected error given the first `t` pivots has the
//! closed form
//!
//! ```text
//! (r - t + 1) · e_{r-t+1}(λ(R)) / e_{r-t}(λ(R)),   R = A - A_{J_t}.
//! ```
//!
//! Choosing each pivot to minimize this value never raises it, so the final
//! error stays below the bound. [`cca`] evaluates it from eigenvalues,
//! [`cca2`] from traces of powers, and [`quasi_cca`] restarts the latter in
//! blocks to keep the trace-based ratios well conditioned.

mod cca2;
mod traces;

use nalgebra::DVector;

pub use cca2::{cca2, quasi_cca};
pub use traces::{
    coeff_ratio_estimate, coeff_ratio_from_traces, condition_limit, power_traces, update_traces, CoeffRatio,
    FactoredResidual, SymOperator,
};

use crate::eig::{elementary_symmetric, sym_eig_matrix, tridiag_eig, tridiagonalize_dpr1};
use crate::error::{Error, Result};
use crate::matrix::{symmetrize, DenseSymMatrix};
use crate::zero_threshold;

/// `(r + 1) Σ_{s > r} σ_s` for singular values sorted in descending order.
pub fn nuclear_bound(singular_values: &[f64], r: usize) -> f64 {
    let tail: f64 = singular_values.get(r..).unwrap_or(&[]).iter().sum();
    (r + 1) as f64 * tail
}

/// `√(n - r) (r + 1) (Σ_{s > r} σ_s²)^{1/2}`, the Frobenius-norm analogue.
pub fn frobenius_bound(singular_values: &[f64], r: usize) -> f64 {
    let n = singular_values.len();
    if r >= n {
        return 0.0;
    }
    let tail: f64 = singular_values[r..].iter().map(|s| s * s).sum();
    ((n - r) as f64).sqrt() * (r + 1) as f64 * tail.sqrt()
}

/// Eigenvalues at or below the zero threshold become exact zeros.
fn clamp_spectrum(values: &mut [f64]) {
    let max = values.iter().copied().fold(0.0, f64::max);
    let thr = zero_threshold(values.len(), max);
    for v in values.iter_mut() {
        if *v <= thr {
            *v = 0.0;
        }
    }
}

/// `e_{k+1} / e_k` of nonnegative values, `+∞` when `e_k = 0`.
fn spectrum_ratio(values: &[f64], k: usize) -> f64 {
    let scale = values.iter().copied().fold(0.0, f64::max);
    if !(scale > 0.0) {
        return if k == 0 { 0.0 } else { f64::INFINITY };
    }
    let scaled: Vec<f64> = values.iter().map(|v| v / scale).collect();
    let e = elementary_symmetric(&scaled, k + 1);
    if e.len() <= k || !(e[k] > 0.0) {
        return f64::INFINITY;
    }
    let next = e.get(k + 1).copied().unwrap_or(0.0);
    scale * next / e[k]
}

/// Expected nuclear-norm error of a rank-`r` cross approximation drawn with
/// volume sampling, given that `t` pivots are fixed and `residual` is what
/// they leave behind.
pub fn conditional_expectation(residual: &DenseSymMatrix, t: usize, r: usize) -> Result<f64> {
    if t == 0 || t > r {
        return Err(Error::Parameter(format!("need 1 <= t <= r, got t = {t}, r = {r}")));
    }
    let mut vals = sym_eig_matrix(residual.as_matrix()).values;
    clamp_spectrum(&mut vals);
    let k = r - t;
    let ratio = spectrum_ratio(&vals, k);
    if !ratio.is_finite() {
        return Err(Error::InfeasibleExtension { needed: k });
    }
    Ok((k + 1) as f64 * ratio)
}

/// One pivot choice of a certified selection.
#[derive(Clone, Debug, PartialEq)]
pub struct CcaStep {
    pub index: usize,
    /// Conditional expected error after this choice.
    pub expectation: f64,
    /// Conditional expected error before this choice.
    pub prior_expectation: f64,
    /// Condition number of the power-sum matrix, for trace-based steps.
    pub condition: Option<f64>,
    /// The chosen ratio, or its margin over the runner-up, is not trustworthy.
    pub unreliable: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CcaDiagnostics {
    pub steps: Vec<CcaStep>,
    /// Positions in `steps` where a restarted block begins.
    pub restarts: Vec<usize>,
}

impl CcaDiagnostics {
    pub fn flagged(&self) -> bool {
        self.steps.iter().any(|s| s.unreliable)
    }

    /// Expected error before the first choice.
    pub fn initial_expectation(&self) -> Option<f64> {
        self.steps.first().map(|s| s.prior_expectation)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CcaResult {
    pub j: Vec<usize>,
    pub diagnostics: CcaDiagnostics,
    /// The residual ran out of admissible pivots before `r` were chosen.
    pub exhausted: bool,
}

pub(crate) fn check_rank(r: usize, n: usize) -> Result<()> {
    if r == 0 || r > n {
        return Err(Error::Parameter(format!("rank must satisfy 1 <= r <= n = {n}, got {r}")));
    }
    Ok(())
}

/// Certified cross approximation by conditional expectations, evaluated
/// from the spectrum of every candidate residual.
///
/// Each step eigendecomposes the residual `R = QΛQᵀ`; the residual after
/// pivot `j` is then similar to `Λ - ũũᵀ` with `ũ = ΛQ(j,:)ᵀ / √R_jj`, whose
/// spectrum comes from bulge chasing to tridiagonal form and divide and
/// conquer. Costs `O(r n³)`.
pub fn cca(a: &DenseSymMatrix, r: usize) -> Result<CcaResult> {
    let n = a.n();
    check_rank(r, n)?;
    let max_diag = a.diagonal().into_iter().fold(0.0, f64::max);
    let thr = zero_threshold(n, max_diag);
    let mut res = a.as_matrix().clone();
    let mut selected = vec![false; n];
    let mut out = CcaResult {
        j: Vec::new(),
        diagnostics: CcaDiagnostics::default(),
        exhausted: false,
    };
    for step in 0..r {
        let k = r - step - 1;
        let eig = sym_eig_matrix(&res);
        let mut lambda_clamped = eig.values.clone();
        clamp_spectrum(&mut lambda_clamped);
        let prior = (k + 2) as f64 * spectrum_ratio(&lambda_clamped, k + 1);

        let mut best: Option<(usize, f64)> = None;
        let mut fallback: Option<(usize, f64)> = None;
        for j in 0..n {
            let rjj = res[(j, j)];
            if selected[j] || !(rjj > thr) {
                continue;
            }
            if fallback.is_none_or(|(_, d)| rjj > d) {
                fallback = Some((j, rjj));
            }
            let s = rjj.sqrt();
            let u: Vec<f64> = (0..n).map(|l| eig.values[l] * eig.vectors[(j, l)] / s).collect();
            let mut mu = tridiag_eig(&tridiagonalize_dpr1(&eig.values, &u));
            clamp_spectrum(&mut mu);
            let ratio = spectrum_ratio(&mu, k);
            if ratio.is_finite() && best.is_none_or(|(_, b)| ratio < b) {
                best = Some((j, ratio));
            }
        }
        // no candidate leaves enough rank: fall back to the largest pivot
        let (p, ratio, unreliable) = match (best, fallback) {
            (Some((p, v)), _) => (p, v, false),
            (None, Some((p, _))) => (p, f64::INFINITY, true),
            (None, None) => {
                out.exhausted = true;
                break;
            }
        };
        let u = res.column(p) / res[(p, p)].sqrt();
        res -= &u * u.transpose();
        symmetrize(&mut res);
        for i in 0..n {
            res[(p, i)] = 0.0;
            res[(i, p)] = 0.0;
        }
        selected[p] = true;
        out.j.push(p);
        out.diagnostics.steps.push(CcaStep {
            index: p,
            expectation: (k + 1) as f64 * ratio,
            prior_expectation: prior,
            condition: None,
            unreliable,
        });
    }
    Ok(out)
}

pub(crate) fn unit_column(col: DVector<f64>, pivot: f64) -> DVector<f64> {
    col / pivot.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{make_test_matrix, residual_matrix, MatrixHandle, TestMatrix};
    use crate::oracle::singular_values;
    use itertools::Itertools;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spsd(n: usize, rank: usize, rng: &mut ChaCha8Rng) -> DenseSymMatrix {
        let g = DMatrix::from_fn(n, rank, |_, _| rng.random::<f64>() - 0.5);
        DenseSymMatrix::from_matrix(&g * g.transpose()).unwrap()
    }

    fn det(a: &DenseSymMatrix, j: &[usize]) -> f64 {
        if j.is_empty() {
            1.0
        } else {
            a.principal(j).into_matrix().determinant()
        }
    }

    fn trace_residual(a: &DenseSymMatrix, j: &[usize]) -> f64 {
        residual_matrix(&MatrixHandle::from_dense(a.clone()), j).unwrap().trace()
    }

    #[test]
    fn bound_examples() {
        assert_eq!(nuclear_bound(&[1.0, 0.5, 0.25], 1), 1.5);
        assert_eq!(nuclear_bound(&[1.0, 0.5, 0.25], 3), 0.0);
        assert_eq!(nuclear_bound(&[1.0, 0.5, 0.25], 7), 0.0);
        let f = frobenius_bound(&[1.0, 0.5, 0.25], 1);
        assert!((f - 2f64.sqrt() * 2.0 * 0.3125f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn expectation_examples() {
        let d = DenseSymMatrix::from_diagonal(&[3.0, 2.0, 1.0]);
        assert!((conditional_expectation(&d, 2, 2).unwrap() - 6.0).abs() < 1e-14);
        // t = r - 1: 2 e₂ / e₁ = 2 · 11 / 6
        assert!((conditional_expectation(&d, 1, 2).unwrap() - 22.0 / 6.0).abs() < 1e-14);
        let z = DenseSymMatrix::from_diagonal(&[1.0, 0.0, 0.0]);
        assert_eq!(
            conditional_expectation(&z, 1, 3).unwrap_err(),
            Error::InfeasibleExtension { needed: 2 }
        );
    }

    #[test]
    fn expectation_is_volume_weighted_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = random_spsd(5, 5, &mut rng);
        let (r, fixed) = (3usize, [2usize]);
        let rest: Vec<usize> = (0..5).filter(|i| !fixed.contains(i)).collect();
        let mut num = 0.0;
        let mut den = 0.0;
        for comp in rest.iter().copied().combinations(r - 1) {
            let j: Vec<usize> = fixed.iter().copied().chain(comp).collect();
            let v = det(&a, &j);
            num += v * trace_residual(&a, &j);
            den += v;
        }
        let res = residual_matrix(&MatrixHandle::from_dense(a.clone()), &fixed).unwrap();
        let got = conditional_expectation(&res, 1, r).unwrap();
        assert!((got / (num / den) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn first_step_minimizes_residual_trace() {
        let d = DenseSymMatrix::from_diagonal(&[3.0, 2.0, 1.0]);
        assert_eq!(cca(&d, 1).unwrap().j, vec![0]);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_spsd(9, 9, &mut rng);
        let best = (0..9)
            .min_by(|&x, &y| trace_residual(&a, &[x]).total_cmp(&trace_residual(&a, &[y])))
            .unwrap();
        assert_eq!(cca(&a, 1).unwrap().j, vec![best]);
    }

    #[test]
    fn exact_rank_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_spsd(15, 4, &mut rng);
        let res = cca(&a, 4).unwrap();
        assert!(!res.exhausted);
        assert!(trace_residual(&a, &res.j) <= 15.0 * 1e-10 * a.trace());
    }

    #[test]
    fn hilbert_steps_follow_the_sequential_oracle() {
        let a = make_test_matrix(TestMatrix::A3, 4, None).unwrap().to_dense();
        let h = MatrixHandle::from_dense(a.clone());
        let res = cca(&a, 2).unwrap();
        let expect = |j: &[usize]| {
            let r = residual_matrix(&h, j).unwrap();
            conditional_expectation(&r, j.len(), 2).unwrap()
        };
        let first = (0..4).min_by(|&x, &y| expect(&[x]).total_cmp(&expect(&[y]))).unwrap();
        let second = (0..4)
            .filter(|&y| y != first)
            .min_by(|&x, &y| expect(&[first, x]).total_cmp(&expect(&[first, y])))
            .unwrap();
        assert_eq!(res.j, vec![first, second]);
        let final_value = expect(&res.j);
        assert!((res.diagnostics.steps[1].expectation - final_value).abs() < 1e-10 * final_value);
    }

    #[test]
    fn certification_and_monotonicity_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..8 {
            let n = rng.random_range(6..25);
            let a = random_spsd(n, n, &mut rng);
            let sv = singular_values(&a);
            for r in 1..=n.min(6) {
                let res = cca(&a, r).unwrap();
                let err = trace_residual(&a, &res.j);
                assert!(err <= nuclear_bound(&sv, r) + 1e-8 * a.trace());
                for s in &res.diagnostics.steps {
                    assert!(s.expectation <= s.prior_expectation * (1.0 + 1e-9));
                }
                let init = res.diagnostics.initial_expectation().unwrap();
                assert!(init <= nuclear_bound(&sv, r) * (1.0 + 1e-9));
            }
        }
    }
}
