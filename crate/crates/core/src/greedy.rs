//! Adaptive cross approximation with greedy diagonal pivoting.
//!
//! The residual `A - UUᵀ` is never formed. Only its diagonal is kept up to
//! date, and the residual column of the next pivot is rebuilt from `U`, so a
//! rank-`r` selection reads `n + r·n` entries of `A`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matrix::MatrixHandle;
use crate::zero_threshold;

/// Incremental cross approximation `A_J = UUᵀ`.
#[derive(Clone, Debug)]
pub struct SelectionState {
    /// Pivot indices in selection order.
    pub j: Vec<usize>,
    /// `n × |J|` matrix of normalized residual columns.
    pub u: DMatrix<f64>,
    pub residual_diag: Vec<f64>,
    /// Residual diagonal entry at each pivot when it was chosen.
    pub pivots: Vec<f64>,
    /// `Σ log pivot = log det A(J,J)`.
    pub log_volume: f64,
    /// Set when no pivot above the zero threshold was left before `r` steps.
    pub breakdown: bool,
}

/// Step-by-step greedy elimination on one matrix.
pub(crate) struct Elimination<'a> {
    a: &'a MatrixHandle,
    cols: Vec<DVector<f64>>,
    j: Vec<usize>,
    selected: Vec<bool>,
    diag: Vec<f64>,
    pivots: Vec<f64>,
    pub(crate) threshold: f64,
}

impl<'a> Elimination<'a> {
    pub(crate) fn new(a: &'a MatrixHandle) -> Self {
        let diag = a.diagonal();
        let max_diag = diag.iter().copied().fold(0.0, f64::max);
        Self {
            a,
            cols: Vec::new(),
            j: Vec::new(),
            selected: vec![false; a.n()],
            threshold: zero_threshold(a.n(), max_diag),
            diag,
            pivots: Vec::new(),
        }
    }

    pub(crate) fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub(crate) fn is_selected(&self, i: usize) -> bool {
        self.selected[i]
    }

    /// Index of the largest residual diagonal entry among unselected indices.
    fn argmax(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.diag.iter().enumerate() {
            if self.selected[i] {
                continue;
            }
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        best
    }

    /// Eliminates pivot `p`. Returns `false` without changing anything when
    /// the pivot is numerically zero.
    pub(crate) fn eliminate(&mut self, p: usize) -> bool {
        let pivot = self.diag[p];
        if !(pivot > self.threshold) {
            return false;
        }
        let mut col = self.a.column(p);
        for u in &self.cols {
            col.axpy(-u[p], u, 1.0);
        }
        // the recomputed pivot is more accurate than the running diagonal
        let pivot = col[p];
        if !(pivot > self.threshold) {
            return false;
        }
        col /= pivot.sqrt();
        for (d, c) in self.diag.iter_mut().zip(col.iter()) {
            *d = (*d - c * c).max(0.0);
        }
        self.diag[p] = 0.0;
        self.selected[p] = true;
        self.j.push(p);
        self.pivots.push(pivot);
        self.cols.push(col);
        true
    }

    pub(crate) fn finish(self, breakdown: bool) -> SelectionState {
        let n = self.a.n();
        let u = if self.cols.is_empty() {
            DMatrix::zeros(n, 0)
        } else {
            DMatrix::from_columns(&self.cols)
        };
        SelectionState {
            log_volume: self.pivots.iter().map(|p| p.ln()).sum(),
            j: self.j,
            u,
            residual_diag: self.diag,
            pivots: self.pivots,
            breakdown,
        }
    }
}

fn check_rank(r: usize, n: usize) -> Result<()> {
    if r == 0 || r > n {
        return Err(Error::Parameter(format!("rank must satisfy 1 <= r <= n = {n}, got {r}")));
    }
    Ok(())
}

/// Greedy selection of `r` pivots maximizing each residual diagonal entry.
///
/// Ties go to the smallest index. A rank-deficient `A` yields the pivots
/// found so far with [`SelectionState::breakdown`] set.
pub fn aca(a: &MatrixHandle, r: usize) -> Result<SelectionState> {
    check_rank(r, a.n())?;
    let mut el = Elimination::new(a);
    for _ in 0..r {
        let Some((p, _)) = el.argmax() else {
            return Ok(el.finish(true));
        };
        if !el.eliminate(p) {
            return Ok(el.finish(true));
        }
    }
    Ok(el.finish(false))
}

/// Selections on `A` and `B` advanced with the same pivot sequence.
#[derive(Clone, Debug)]
pub struct RatioSelection {
    pub a: SelectionState,
    pub b: SelectionState,
}

impl RatioSelection {
    pub fn j(&self) -> &[usize] {
        &self.a.j
    }

    /// `log det A(J,J) - log det B(J,J)`.
    pub fn log_ratio(&self) -> f64 {
        self.a.log_volume - self.b.log_volume
    }
}

/// Greedy selection for the ratio `det A(J,J) / det B(J,J)`.
///
/// Each pivot maximizes the ratio of the residual diagonals of `A` and `B`.
/// Candidates whose `B` residual is numerically zero are excluded; if every
/// candidate is excluded the selection fails with [`Error::Breakdown`].
pub fn aca_ratio(a: &MatrixHandle, b: &MatrixHandle, r: usize) -> Result<RatioSelection> {
    if a.n() != b.n() {
        return Err(Error::Dimension(format!("A is {} but B is {}", a.n(), b.n())));
    }
    check_rank(r, a.n())?;
    let mut ea = Elimination::new(a);
    let mut eb = Elimination::new(b);
    for step in 0..r {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..a.n() {
            if ea.is_selected(i) || !(eb.diag()[i] > eb.threshold) {
                continue;
            }
            let ratio = ea.diag()[i] / eb.diag()[i];
            if best.is_none_or(|(_, v)| ratio > v) {
                best = Some((i, ratio));
            }
        }
        let Some((p, _)) = best else {
            return Err(Error::Breakdown { found: step });
        };
        if !ea.eliminate(p) {
            return Ok(RatioSelection {
                a: ea.finish(true),
                b: eb.finish(false),
            });
        }
        if !eb.eliminate(p) {
            return Err(Error::Breakdown { found: step });
        }
    }
    Ok(RatioSelection {
        a: ea.finish(false),
        b: eb.finish(false),
    })
}
