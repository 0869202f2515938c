//! Local volume maximization by single-index swaps.
//!
//! For a pivot set `J` the state caches `A(:,J)`, the Cholesky factor of
//! `A(J,J)`, `D = A(J,J)⁻¹` and `B = A(:,J) D`. Replacing `j_i` by `h`
//! multiplies the volume by
//!
//! ```text
//! g(h, i) = D_ii (A_hh - C_hh) + B_hi²,   C_hh = B(h,:) A(J,h),
//! ```
//!
//! and after a swap `D`, `B` and the Cholesky factor are corrected by
//! rank-2 terms in `O(nr)`, plus one new column of `A`.

use nalgebra::{DMatrix, DVector, Matrix2};

use crate::error::{Error, Result};
use crate::greedy::{aca, aca_ratio};
use crate::matrix::{check_index_set, symmetrize, CholFactor, Direction, MatrixHandle};

/// Cached quantities for swap-gain evaluation on one matrix.
#[derive(Clone, Debug)]
pub struct LocalSearchState {
    pub j: Vec<usize>,
    pub chol: CholFactor,
    /// `A(:,J) A(J,J)⁻¹`, `n × r`.
    pub b: DMatrix<f64>,
    /// `A(J,J)⁻¹`.
    pub d: DMatrix<f64>,
    /// `A(:,J)`.
    pub cols: DMatrix<f64>,
    /// `diag(B A(J,:))`.
    pub cdiag: Vec<f64>,
    pub adiag: Vec<f64>,
    in_j: Vec<bool>,
    /// `true` when `b`, `d` and `chol` came from a full recomputation.
    fresh: bool,
}

impl LocalSearchState {
    /// Builds the state from scratch. Fails when `A(J,J)` is singular.
    pub fn new(a: &MatrixHandle, j: &[usize]) -> Result<Self> {
        let n = a.n();
        check_index_set(j, n)?;
        if j.is_empty() {
            return Err(Error::Parameter("local search needs a nonempty index set".into()));
        }
        let adiag = a.diagonal();
        let cols = DMatrix::from_columns(&j.iter().map(|&p| a.column(p)).collect::<Vec<_>>());
        let mut in_j = vec![false; n];
        j.iter().for_each(|&p| in_j[p] = true);
        let mut s = Self {
            j: j.to_vec(),
            chol: CholFactor::from_upper(DMatrix::zeros(0, 0)),
            b: DMatrix::zeros(0, 0),
            d: DMatrix::zeros(0, 0),
            cols,
            cdiag: Vec::new(),
            adiag,
            in_j,
            fresh: false,
        };
        s.recompute()?;
        Ok(s)
    }

    pub fn r(&self) -> usize {
        self.j.len()
    }

    pub fn n(&self) -> usize {
        self.adiag.len()
    }

    pub fn ddiag(&self) -> Vec<f64> {
        (0..self.r()).map(|i| self.d[(i, i)]).collect()
    }

    /// `log det A(J,J)`.
    pub fn log_volume(&self) -> f64 {
        self.chol.log_det()
    }

    fn pivot_block(&self) -> DMatrix<f64> {
        let mut k = DMatrix::from_fn(self.r(), self.r(), |a, b| self.cols[(self.j[a], b)]);
        symmetrize(&mut k);
        k
    }

    /// Recomputes the factor, `D`, `B` and `diag(C)` from `A(:,J)`.
    fn recompute(&mut self) -> Result<()> {
        self.chol = CholFactor::factor(&self.pivot_block()).map_err(|_| Error::SingularPivotBlock)?;
        self.d = self.chol.inverse();
        self.b = &self.cols * &self.d;
        self.update_cdiag();
        self.fresh = true;
        Ok(())
    }

    fn update_cdiag(&mut self) {
        let r = self.r();
        self.cdiag = (0..self.n())
            .map(|h| (0..r).map(|l| self.b[(h, l)] * self.cols[(h, l)]).sum())
            .collect();
    }

    /// Signed volume ratio of replacing `j_i` by `h`.
    pub fn gain(&self, h: usize, i: usize) -> f64 {
        let bhi = self.b[(h, i)];
        self.d[(i, i)] * (self.adiag[h] - self.cdiag[h]) + bhi * bhi
    }

    /// Replaces `j_i` by `h`, reading the column `A(:,h)`.
    ///
    /// With `update` the cached quantities are corrected by low-rank terms;
    /// a failed Cholesky downdate or a non-positive gain falls back to full
    /// recomputation. Returns `true` when the fallback was taken.
    fn swap(&mut self, a: &MatrixHandle, h: usize, i: usize, update: bool) -> Result<bool> {
        let r = self.r();
        let old = self.j[i];
        let new_col = a.column(h);
        let mut fallback = !update;
        if update {
            fallback = self.swap_update(h, i, &new_col).is_err();
        }
        self.cols.set_column(i, &new_col);
        self.j[i] = h;
        self.in_j[old] = false;
        self.in_j[h] = true;
        if fallback {
            self.recompute()?;
        } else {
            self.update_cdiag();
            self.fresh = false;
        }
        debug_assert_eq!(self.b.ncols(), r);
        Ok(update && fallback)
    }

    fn swap_update(&mut self, h: usize, i: usize, new_col: &DVector<f64>) -> Result<()> {
        let r = self.r();
        let g = self.gain(h, i);
        if !(g > 0.0) {
            return Err(Error::SingularPivotBlock);
        }
        let old = self.j[i];

        // Cholesky factor: A(J',J') = A(J,J) + ũ₁ũ₁ᵀ - ũ₂ũ₂ᵀ
        let delta = self.adiag[h] + self.adiag[old] - 2.0 * new_col[old];
        let w: Vec<f64> = (0..r).map(|k| new_col[self.j[k]] - self.cols[(self.j[k], i)]).collect();
        let mut u1 = w.clone();
        let mut u2 = w;
        u1[i] += 0.5 * (delta + 1.0);
        u2[i] += 0.5 * (delta - 1.0);
        let mut chol = self.chol.clone();
        chol.rank1_modify(&u1, Direction::Update)?;
        chol.rank1_modify(&u2, Direction::Downdate)?;

        // D' = D - Gᵀ M⁻¹ G,  G = [D(i,:); B(h,:) - e_iᵀ]
        let bhi = self.b[(h, i)];
        let m = Matrix2::new(self.d[(i, i)], bhi, bhi, self.cdiag[h] - self.adiag[h]);
        let minv = m.try_inverse().ok_or(Error::SingularPivotBlock)?;
        let mut gmat = DMatrix::zeros(2, r);
        gmat.row_mut(0).copy_from(&self.d.row(i));
        gmat.row_mut(1).copy_from(&self.b.row(h));
        gmat[(1, i)] -= 1.0;
        let minv = DMatrix::from_fn(2, 2, |a, b| minv[(a, b)]);
        let mg = &minv * &gmat;
        let mut d_new = &self.d - gmat.transpose() * &mg;
        symmetrize(&mut d_new);

        // B' = B - [B(:,i), y] M⁻¹ G + (A(:,h) - A(:,j_i)) D'(i,:)
        let y = &self.cols * self.b.row(h).transpose() - self.cols.column(i);
        let mut left = DMatrix::zeros(self.n(), 2);
        left.set_column(0, &self.b.column(i));
        left.set_column(1, &y);
        let diff = new_col - self.cols.column(i);
        let b_new = &self.b - left * mg + diff * d_new.row(i);

        self.chol = chol;
        self.d = d_new;
        self.b = b_new;
        Ok(())
    }
}

/// Swap gains for every `h ∉ J` (rows, ascending) and position `i` (columns).
#[derive(Clone, Debug)]
pub struct SwapGains {
    pub rows: Vec<usize>,
    pub v: DMatrix<f64>,
}

impl SwapGains {
    pub fn max(&self) -> f64 {
        self.v.iter().copied().fold(0.0, f64::max)
    }
}

/// `V[h,i] = |det A(Ĵ,Ĵ)| / |det A(J,J)|` where `Ĵ` replaces `j_i` by `h`.
pub fn swap_gain_matrix(state: &LocalSearchState) -> SwapGains {
    let rows: Vec<usize> = (0..state.n()).filter(|&h| !state.in_j[h]).collect();
    let v = DMatrix::from_fn(rows.len(), state.r(), |k, i| state.gain(rows[k], i).abs());
    SwapGains { rows, v }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalSearchResult {
    pub j: Vec<usize>,
    /// Number of swaps performed.
    pub iterations: usize,
    /// `log det A(J_out) - log det A(J_in)`.
    pub log_volume_gain: f64,
    /// Volume factor of each swap.
    pub gains: Vec<f64>,
    /// Swaps whose low-rank update was abandoned for a recomputation.
    pub fallbacks: usize,
}

/// Tolerance below which a computed gain counts as negative.
fn gain_tolerance(n: usize) -> f64 {
    n as f64 * 1e-10
}

/// Best swap by `score`, ties to the smallest `h` and then smallest `i`.
fn best_swap(
    state: &LocalSearchState,
    mut score: impl FnMut(usize, usize) -> Option<f64>,
) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for h in 0..state.n() {
        if state.in_j[h] {
            continue;
        }
        for i in 0..state.r() {
            if let Some(s) = score(h, i) {
                if best.is_none_or(|(_, _, b)| s > b) {
                    best = Some((h, i, s));
                }
            }
        }
    }
    best
}

fn any_negative_gain(state: &LocalSearchState) -> bool {
    let tol = gain_tolerance(state.n());
    (0..state.n())
        .filter(|&h| !state.in_j[h])
        .any(|h| (0..state.r()).any(|i| state.gain(h, i) < -tol))
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tol must be positive, got {tol}")));
    }
    Ok(())
}

/// Swaps single indices while some swap grows `det A(J,J)` by more than
/// `1 + tol`. Ties go to the smallest `h`, then the smallest position `i`.
///
/// With `do_update = false` the cached quantities are recomputed after every
/// swap instead of being corrected by low-rank updates.
pub fn local_maxvol(a: &MatrixHandle, j: &[usize], tol: f64, do_update: bool) -> Result<LocalSearchResult> {
    check_tol(tol)?;
    let mut state = LocalSearchState::new(a, j)?;
    let mut out = LocalSearchResult {
        j: Vec::new(),
        iterations: 0,
        log_volume_gain: 0.0,
        gains: Vec::new(),
        fallbacks: 0,
    };
    loop {
        if !state.fresh && any_negative_gain(&state) {
            state.recompute()?;
            out.fallbacks += 1;
        }
        let Some((h, i, v)) = best_swap(&state, |h, i| Some(state.gain(h, i).abs())) else {
            break;
        };
        if !(v > 1.0 + tol) {
            break;
        }
        if state.swap(a, h, i, do_update)? {
            out.fallbacks += 1;
        }
        out.iterations += 1;
        out.log_volume_gain += v.ln();
        out.gains.push(v);
    }
    out.j = state.j;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxvolResult {
    pub j: Vec<usize>,
    /// Greedy starting set.
    pub initial: Vec<usize>,
    pub search: LocalSearchResult,
    /// The greedy start found fewer than `r` nonzero pivots.
    pub breakdown: bool,
}

/// Greedy selection followed by local volume maximization.
pub fn maxvol(a: &MatrixHandle, r: usize, tol: f64) -> Result<MaxvolResult> {
    maxvol_with(a, r, tol, true)
}

pub fn maxvol_with(a: &MatrixHandle, r: usize, tol: f64, do_update: bool) -> Result<MaxvolResult> {
    let start = aca(a, r)?;
    if start.j.is_empty() {
        return Err(Error::Breakdown { found: 0 });
    }
    let search = local_maxvol(a, &start.j, tol, do_update)?;
    Ok(MaxvolResult {
        j: search.j.clone(),
        initial: start.j,
        search,
        breakdown: start.breakdown,
    })
}

/// Swap threshold on the `B` gain below which a candidate is excluded.
fn ratio_exclusion(n: usize) -> f64 {
    gain_tolerance(n)
}

/// Local maximization of `det A(J,J) / det B(J,J)`.
///
/// Swaps whose `B` gain is numerically zero would make `B(J,J)` singular and
/// are excluded.
pub fn local_maxvol_ratio(a: &MatrixHandle, b: &MatrixHandle, j: &[usize], tol: f64) -> Result<LocalSearchResult> {
    if a.n() != b.n() {
        return Err(Error::Dimension(format!("A is {} but B is {}", a.n(), b.n())));
    }
    check_tol(tol)?;
    let mut sa = LocalSearchState::new(a, j)?;
    let mut sb = LocalSearchState::new(b, j)?;
    let excl = ratio_exclusion(a.n());
    let mut out = LocalSearchResult {
        j: Vec::new(),
        iterations: 0,
        log_volume_gain: 0.0,
        gains: Vec::new(),
        fallbacks: 0,
    };
    loop {
        for s in [&mut sa, &mut sb] {
            if !s.fresh && any_negative_gain(s) {
                s.recompute()?;
                out.fallbacks += 1;
            }
        }
        let best = best_swap(&sa, |h, i| {
            let gb = sb.gain(h, i);
            (gb > excl).then(|| sa.gain(h, i).abs() / gb)
        });
        let Some((h, i, v)) = best else {
            break;
        };
        if !(v > 1.0 + tol) {
            break;
        }
        out.fallbacks += usize::from(sa.swap(a, h, i, true)?) + usize::from(sb.swap(b, h, i, true)?);
        out.iterations += 1;
        out.log_volume_gain += v.ln();
        out.gains.push(v);
    }
    out.j = sa.j;
    Ok(out)
}

/// Greedy ratio selection followed by local ratio maximization.
pub fn maxvol_ratio(a: &MatrixHandle, b: &MatrixHandle, r: usize, tol: f64) -> Result<MaxvolResult> {
    let start = aca_ratio(a, b, r)?;
    if start.a.j.is_empty() {
        return Err(Error::Breakdown { found: 0 });
    }
    let search = local_maxvol_ratio(a, b, &start.a.j, tol)?;
    Ok(MaxvolResult {
        j: search.j.clone(),
        initial: start.a.j,
        search,
        breakdown: start.a.breakdown,
    })
}

/// Upper bound `2 log(r!) / log(1 + tol)` on the number of swaps from a
/// greedy start.
pub fn iteration_bound(r: usize, tol: f64) -> f64 {
    let log_fact: f64 = (1..=r).map(|k| (k as f64).ln()).sum();
    2.0 * log_fact / (1.0 + tol).ln()
}
