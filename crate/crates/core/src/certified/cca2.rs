//! Certified selection from traces of powers, and its restarted variant.

use super::traces::{coeff_ratio_estimate, power_traces, update_traces, FactoredResidual};
use super::{check_rank, unit_column, CcaDiagnostics, CcaResult, CcaStep};
use crate::error::{Error, Result};
use crate::matrix::MatrixHandle;
use crate::zero_threshold;

/// Certified cross approximation with the coefficient ratios obtained from
/// traces of residual powers.
///
/// Per step, the traces of every candidate residual come from one batched
/// Krylov projection ([`update_traces`]) and the ratio from the power-sum
/// determinants. Steps whose ratio is ill conditioned, or whose winner is
/// not separated from the runner-up by more than the expected rounding
/// error, are flagged in the diagnostics.
pub fn cca2(a: &MatrixHandle, r: usize) -> Result<CcaResult> {
    check_rank(r, a.n())?;
    let mut residual = FactoredResidual::new(a);
    let mut out = CcaResult {
        j: Vec::new(),
        diagnostics: CcaDiagnostics::default(),
        exhausted: false,
    };
    let mut selected = vec![false; a.n()];
    let thr = initial_threshold(&residual);
    run_block(&mut residual, r, thr, &mut selected, &mut out)?;
    Ok(out)
}

/// Restarted certified selection: blocks of at most `rbar` pivots, each
/// chosen by [`cca2`] on the residual the previous blocks leave behind.
pub fn quasi_cca(a: &MatrixHandle, r: usize, rbar: usize) -> Result<CcaResult> {
    check_rank(r, a.n())?;
    if rbar == 0 || rbar > r {
        return Err(Error::Parameter(format!("block rank must satisfy 1 <= rbar <= r = {r}, got {rbar}")));
    }
    let mut residual = FactoredResidual::new(a);
    let mut out = CcaResult {
        j: Vec::new(),
        diagnostics: CcaDiagnostics::default(),
        exhausted: false,
    };
    let mut selected = vec![false; a.n()];
    let thr = initial_threshold(&residual);
    while out.j.len() < r && !out.exhausted {
        out.diagnostics.restarts.push(out.diagnostics.steps.len());
        let block = rbar.min(r - out.j.len());
        run_block(&mut residual, block, thr, &mut selected, &mut out)?;
    }
    Ok(out)
}

fn initial_threshold(residual: &FactoredResidual) -> f64 {
    let d = residual.diagonal();
    zero_threshold(d.len(), d.iter().copied().fold(0.0, f64::max))
}

/// Selects `r` more pivots on `residual`, appending to `out`.
fn run_block(
    residual: &mut FactoredResidual,
    r: usize,
    thr: f64,
    selected: &mut [bool],
    out: &mut CcaResult,
) -> Result<()> {
    let n = selected.len();
    let mut t = power_traces(&residual.dense(), r + 1);
    for step in 0..r {
        let k = r - step - 1;
        let prior = coeff_ratio_estimate(&t, k + 1);
        let diag = residual.diagonal();
        let cands: Vec<usize> = (0..n).filter(|&j| !selected[j] && diag[j] > thr).collect();
        if cands.is_empty() {
            out.exhausted = true;
            return Ok(());
        }
        let mut u = residual.columns(&cands);
        for (c, &j) in cands.iter().enumerate() {
            u.column_mut(c).unscale_mut(diag[j].sqrt());
        }
        let kk = r - step + 1;
        let rows = update_traces(residual, &t[..kk], &u, kk)?;

        let estimates: Vec<_> = (0..cands.len())
            .map(|c| {
                let row: Vec<f64> = rows.row(c).iter().copied().collect();
                coeff_ratio_estimate(&row, k)
            })
            .collect();
        let mut best: Option<usize> = None;
        for (c, e) in estimates.iter().enumerate() {
            if e.ratio.is_finite() && best.is_none_or(|b| e.ratio < estimates[b].ratio) {
                best = Some(c);
            }
        }
        // no candidate leaves enough rank: fall back to the largest pivot
        let c = best.unwrap_or_else(|| {
            (1..cands.len()).fold(0, |b, c| if diag[cands[c]] > diag[cands[b]] { c } else { b })
        });
        let chosen = estimates[c];
        let runner_up = estimates
            .iter()
            .enumerate()
            .filter(|&(o, e)| o != c && e.ratio.is_finite())
            .map(|(_, e)| e.ratio)
            .fold(f64::INFINITY, f64::min);
        let margin = 100.0 * chosen.condition.max(1.0) * f64::EPSILON * chosen.ratio.abs();
        let near_tie = runner_up.is_finite() && runner_up - chosen.ratio <= margin;

        let p = cands[c];
        let col = residual.columns(&[p]).column(0).clone_owned();
        residual.push(&unit_column(col, diag[p]));
        selected[p] = true;
        out.j.push(p);
        out.diagnostics.steps.push(CcaStep {
            index: p,
            expectation: (k + 1) as f64 * chosen.ratio,
            prior_expectation: (k + 2) as f64 * prior.ratio,
            condition: Some(chosen.condition),
            unreliable: !chosen.reliable || near_tie || best.is_none(),
        });
        t = rows.row(c).iter().copied().collect::<Vec<f64>>();
        t.truncate(kk);
    }
    Ok(())
}
