//! Cuppen's divide-and-conquer method for the eigenvalues of a symmetric
//! tridiagonal matrix.
//!
//! Only eigenvalues are returned, but every subproblem also carries the first
//! and last components of its eigenvectors: those are exactly the rank-1
//! coupling vector needed when two halves are merged, so the whole recursion
//! costs `O(n²)` without ever forming eigenvectors.

use super::TridiagSym;

const EPS: f64 = f64::EPSILON;
/// Blocks up to this size are handled by implicit QL.
const LEAF: usize = 16;
const MAX_SECULAR_ITERS: usize = 100;

/// Eigenvalues of `t` in ascending order.
pub fn tridiag_eig(t: &TridiagSym) -> Vec<f64> {
    let n = t.n();
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    for i in 0..n {
        let split = i + 1 == n || t.e[i].abs() <= EPS * (t.d[i].abs() + t.d[i + 1].abs());
        if split {
            let block = solve(&t.d[start..=i], &t.e[start..i]);
            out.extend(block.values);
            start = i + 1;
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Ascending eigenvalues with the first and last row of the eigenvector matrix.
struct Spectrum {
    values: Vec<f64>,
    first: Vec<f64>,
    last: Vec<f64>,
}

fn solve(d: &[f64], e: &[f64]) -> Spectrum {
    let n = d.len();
    if n <= LEAF {
        return ql_two_rows(d, e);
    }
    let m = n / 2;
    let beta = e[m - 1];
    let mut d1 = d[..m].to_vec();
    let mut d2 = d[m..].to_vec();
    d1[m - 1] -= beta;
    d2[0] -= beta;
    let left = solve(&d1, &e[..m - 1]);
    let right = solve(&d2, &e[m..]);
    merge(beta, left, right)
}

/// Spectrum of `diag(T₁, T₂) + β v vᵀ` with `v = e_m + e_{m+1}`.
fn merge(beta: f64, left: Spectrum, right: Spectrum) -> Spectrum {
    let m = left.values.len();
    let n = m + right.values.len();

    // coupling vector z = Qᵀv in the merged eigenbasis; f/l track the first
    // and last components of each basis vector
    let mut d: Vec<f64> = left.values.iter().chain(&right.values).copied().collect();
    let mut z: Vec<f64> = left.last.iter().chain(&right.first).copied().collect();
    let mut f: Vec<f64> = left.first.iter().copied().chain(std::iter::repeat_n(0.0, n - m)).collect();
    let mut l: Vec<f64> = std::iter::repeat_n(0.0, m).chain(right.last.iter().copied()).collect();

    let mut rho = beta;
    let flip = rho < 0.0;
    if flip {
        d.iter_mut().for_each(|x| *x = -*x);
        rho = -rho;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    d = order.iter().map(|&k| d[k]).collect();
    z = order.iter().map(|&k| z[k]).collect();
    f = order.iter().map(|&k| f[k]).collect();
    l = order.iter().map(|&k| l[k]).collect();

    let znorm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut values = Vec::with_capacity(n);
    let mut first = Vec::with_capacity(n);
    let mut last = Vec::with_capacity(n);

    if rho == 0.0 || znorm == 0.0 {
        values = d;
        first = f;
        last = l;
    } else {
        rho *= znorm * znorm;
        z.iter_mut().for_each(|v| *v /= znorm);
        let dmax = d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let tol = 8.0 * EPS * dmax.max(rho);

        // deflation: negligible weights and (nearly) equal poles
        let mut kept: Vec<usize> = Vec::with_capacity(n);
        for j in 0..n {
            if rho * z[j].abs() <= tol {
                values.push(d[j]);
                first.push(f[j]);
                last.push(l[j]);
                continue;
            }
            if let Some(&p) = kept.last() {
                if d[j] - d[p] <= tol {
                    let tau = z[p].hypot(z[j]);
                    let c = z[j] / tau;
                    let s = z[p] / tau;
                    z[j] = tau;
                    z[p] = 0.0;
                    let (dp, dj) = (d[p], d[j]);
                    d[p] = dp * c * c + dj * s * s;
                    d[j] = dp * s * s + dj * c * c;
                    let (fp, fj) = (f[p], f[j]);
                    f[p] = c * fp - s * fj;
                    f[j] = s * fp + c * fj;
                    let (lp, lj) = (l[p], l[j]);
                    l[p] = c * lp - s * lj;
                    l[j] = s * lp + c * lj;
                    kept.pop();
                    values.push(d[p]);
                    first.push(f[p]);
                    last.push(l[p]);
                }
            }
            kept.push(j);
        }

        let kd: Vec<f64> = kept.iter().map(|&j| d[j]).collect();
        let kz: Vec<f64> = kept.iter().map(|&j| z[j]).collect();
        // after deflation the kept weights no longer have unit norm
        let kn = kz.iter().map(|v| v * v).sum::<f64>();
        let krho = rho * kn;
        let kz: Vec<f64> = kz.iter().map(|v| v / kn.sqrt()).collect();
        let k = kd.len();

        let roots: Vec<Root> = (0..k).map(|i| secular_root(&kd, &kz, krho, i)).collect();

        // Gu–Eisenstat: recompute weights consistent with the computed roots
        let zhat: Vec<f64> = (0..k)
            .map(|j| {
                let mut prod = -roots[k - 1].delta(&kd, j) / krho;
                for (i, root) in roots.iter().enumerate().take(k - 1) {
                    let den = if i < j { kd[i] - kd[j] } else { kd[i + 1] - kd[j] };
                    prod *= -root.delta(&kd, j) / den;
                }
                prod.max(0.0).sqrt().copysign(kz[j])
            })
            .collect();

        for (i, root) in roots.iter().enumerate() {
            let mut nrm = 0.0;
            let mut fi = 0.0;
            let mut li = 0.0;
            for j in 0..k {
                let q = zhat[j] / root.delta(&kd, j);
                nrm += q * q;
                fi += f[kept[j]] * q;
                li += l[kept[j]] * q;
            }
            let nrm = nrm.sqrt();
            values.push(kd[root.origin] + root.tau);
            first.push(fi / nrm);
            last.push(li / nrm);
            debug_assert!(i < k);
        }
    }

    if flip {
        values.iter_mut().for_each(|x| *x = -*x);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    Spectrum {
        values: idx.iter().map(|&k| values[k]).collect(),
        first: idx.iter().map(|&k| first[k]).collect(),
        last: idx.iter().map(|&k| last[k]).collect(),
    }
}

/// Root `λ = d[origin] + tau` of the secular equation, stored relative to
/// its nearest pole so that `d[j] - λ` can be formed without cancellation.
struct Root {
    origin: usize,
    tau: f64,
}

impl Root {
    fn delta(&self, d: &[f64], j: usize) -> f64 {
        (d[j] - d[self.origin]) - self.tau
    }
}

/// The `i`-th root of `1 + ρ Σ z_j² / (d_j - λ) = 0`, with `d` strictly
/// increasing, `‖z‖ = 1` and `ρ > 0`.
///
/// Safeguarded iteration: a two-pole rational model of the secular function
/// (one pole on each side of the root) proposes the next iterate, falling
/// back to bisection of the sign-change bracket.
fn secular_root(d: &[f64], z: &[f64], rho: f64, i: usize) -> Root {
    let k = d.len();
    let last = i + 1 == k;
    if k == 1 {
        return Root { origin: 0, tau: rho * z[0] * z[0] };
    }

    let (origin, mut lo, mut hi) = if last {
        (i, 0.0, rho)
    } else {
        let half = 0.5 * (d[i + 1] - d[i]);
        let mid = d[i] + half;
        let fmid = 1.0 + rho * (0..k).map(|j| z[j] * z[j] / (d[j] - mid)).sum::<f64>();
        if fmid >= 0.0 {
            (i, 0.0, half)
        } else {
            (i + 1, -half, 0.0)
        }
    };
    let delta: Vec<f64> = d.iter().map(|&dj| dj - d[origin]).collect();
    let left_pole = delta[i];
    let right_pole = if last { f64::INFINITY } else { delta[i + 1] };

    let mut tau = 0.5 * (lo + hi);
    for _ in 0..MAX_SECULAR_ITERS {
        let (mut psi, mut dpsi, mut phi, mut dphi) = (0.0, 0.0, 0.0, 0.0);
        for j in 0..k {
            let w = rho * z[j] * z[j];
            let t = 1.0 / (delta[j] - tau);
            if j <= i {
                psi += w * t;
                dpsi += w * t * t;
            } else {
                phi += w * t;
                dphi += w * t * t;
            }
        }
        let fval = 1.0 + psi + phi;
        if fval == 0.0 {
            break;
        }
        if fval < 0.0 {
            lo = tau;
        } else {
            hi = tau;
        }
        let width_ok = hi - lo <= 4.0 * EPS * lo.abs().max(hi.abs());
        let resid_ok = fval.abs() <= 8.0 * k as f64 * EPS * (1.0 + psi.abs() + phi.abs());
        if width_ok || resid_ok {
            break;
        }

        // ψ(x) ≈ p + q / (δ_i - x), φ(x) ≈ r + s / (δ_{i+1} - x)
        let gl = left_pole - tau;
        let q = dpsi * gl * gl;
        let p = psi - q / gl;
        let candidate = if last {
            let c = 1.0 + p + phi;
            if c > 0.0 {
                left_pole + q / c
            } else {
                f64::NAN
            }
        } else {
            let gr = right_pole - tau;
            let s = dphi * gr * gr;
            let r = phi - s / gr;
            let c = 1.0 + p + r;
            rational_root(c, q, s, left_pole, right_pole, lo, hi)
        };
        let next = if candidate > lo && candidate < hi {
            candidate
        } else {
            0.5 * (lo + hi)
        };
        if next == tau {
            break;
        }
        tau = next;
    }
    Root { origin, tau }
}

/// Root in `(lo, hi)` of `c + q/(a - x) + s/(b - x) = 0`.
fn rational_root(c: f64, q: f64, s: f64, a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    // c (a - x)(b - x) + q (b - x) + s (a - x) = 0
    let qa = c;
    let qb = -(c * (a + b) + q + s);
    let qc = c * a * b + q * b + s * a;
    if qa.abs() <= EPS * (qb.abs() + qc.abs()) {
        return if qb != 0.0 { -qc / qb } else { f64::NAN };
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return f64::NAN;
    }
    let sq = disc.sqrt();
    let x1 = (-qb - sq.copysign(qb)) / (2.0 * qa);
    let x2 = if x1 != 0.0 { qc / (qa * x1) } else { f64::NAN };
    if x1 > lo && x1 < hi {
        x1
    } else {
        x2
    }
}

/// Implicit QL for a small block, accumulating only the first and last row of
/// the eigenvector matrix.
fn ql_two_rows(d_in: &[f64], e_in: &[f64]) -> Spectrum {
    let n = d_in.len();
    let mut d = d_in.to_vec();
    let mut e: Vec<f64> = e_in.iter().copied().chain(std::iter::once(0.0)).collect();
    let mut z0 = vec![0.0; n];
    let mut zn = vec![0.0; n];
    z0[0] = 1.0;
    zn[n - 1] = 1.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= EPS * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for z in [&mut z0, &mut zn] {
                    let t = z[i + 1];
                    z[i + 1] = s * z[i] + c * t;
                    z[i] = c * z[i] - s * t;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    Spectrum {
        values: idx.iter().map(|&k| d[k]).collect(),
        first: idx.iter().map(|&k| z0[k]).collect(),
        last: idx.iter().map(|&k| zn[k]).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eig::sym_eig_matrix;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / ((1u64 << 53) as f64)
    }

    fn check(t: &TridiagSym, tol: f64) {
        let want = sym_eig_matrix(&t.to_dense()).values;
        let got = tridiag_eig(t);
        let scale = want.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
        for (k, (g, w)) in got.iter().zip(&want).enumerate() {
            assert!((g - w).abs() <= tol * scale, "k={k}: {g} vs {w} (n={})", t.n());
        }
    }

    #[test]
    fn diagonal_input_is_sorted() {
        let t = TridiagSym::new(vec![3.0, -1.0, 2.0], vec![0.0, 0.0]);
        assert_eq!(tridiag_eig(&t), vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn two_by_two_closed_form() {
        let t = TridiagSym::new(vec![2.0, 2.0], vec![1.0]);
        let ev = tridiag_eig(&t);
        assert!((ev[0] - 1.0).abs() < 1e-15 && (ev[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn leaf_rows_match_dense_eigenvectors() {
        let d = [1.0, 4.0, -2.0, 0.5, 3.0];
        let e = [0.7, -1.1, 0.3, 2.0];
        let s = ql_two_rows(&d, &e);
        let t = TridiagSym::new(d.to_vec(), e.to_vec());
        let dense = sym_eig_matrix(&t.to_dense());
        for k in 0..5 {
            assert!((s.values[k] - dense.values[k]).abs() < 1e-13);
            let sign = (dense.vectors[(0, k)] * s.first[k]).signum();
            assert!((s.first[k] - sign * dense.vectors[(0, k)]).abs() < 1e-12);
            assert!((s.last[k] - sign * dense.vectors[(4, k)]).abs() < 1e-12);
        }
    }

    #[test]
    fn random_tridiagonal_matches_dense() {
        let mut seed = 11u64;
        for n in [17usize, 33, 64, 100, 257] {
            let d: Vec<f64> = (0..n).map(|_| 2.0 * lcg(&mut seed) - 1.0).collect();
            let e: Vec<f64> = (0..n - 1).map(|_| 2.0 * lcg(&mut seed) - 1.0).collect();
            check(&TridiagSym::new(d, e), 1e-12);
        }
    }

    #[test]
    fn clustered_and_graded_spectra() {
        // Wilkinson-like matrix with near-degenerate pairs
        let n = 41;
        let d: Vec<f64> = (0..n).map(|i| (i as f64 - 20.0).abs()).collect();
        check(&TridiagSym::new(d, vec![1.0; n - 1]), 1e-12);

        // trid(-1, 2, -1)
        check(&TridiagSym::new(vec![2.0; 80], vec![-1.0; 79]), 1e-12);

        // strongly graded diagonal
        let d: Vec<f64> = (0..60).map(|i| 0.7f64.powi(i)).collect();
        let e: Vec<f64> = (0..59).map(|i| 0.5 * 0.7f64.powi(i)).collect();
        check(&TridiagSym::new(d, e), 1e-12);

        // repeated diagonal, tiny couplings
        let d = vec![1.0; 50];
        let e: Vec<f64> = (0..49).map(|i| if i % 7 == 0 { 1e-20 } else { 0.3 }).collect();
        check(&TridiagSym::new(d, e), 1e-12);
    }

    #[test]
    fn gershgorin_bounds_hold() {
        let mut seed = 5u64;
        let n = 70;
        let d: Vec<f64> = (0..n).map(|_| 10.0 * lcg(&mut seed)).collect();
        let e: Vec<f64> = (0..n - 1).map(|_| lcg(&mut seed) - 0.5).collect();
        let t = TridiagSym::new(d.clone(), e.clone());
        let ev = tridiag_eig(&t);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let rad = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
            lo = lo.min(d[i] - rad);
            hi = hi.max(d[i] + rad);
        }
        assert!(ev.windows(2).all(|w| w[0] <= w[1]));
        assert!(ev[0] >= lo - 1e-12 && ev[n - 1] <= hi + 1e-12);
        let tr: f64 = d.iter().sum();
        assert!((ev.iter().sum::<f64>() - tr).abs() < 1e-10);
    }
}
