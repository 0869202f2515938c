use super::TridiagSym;

/// Symmetric matrix with bandwidth 2, used while chasing a single bulge.
struct Band {
    d: Vec<f64>,
    e1: Vec<f64>,
    e2: Vec<f64>,
}

impl Band {
    fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        match j - i {
            0 => self.d[i],
            1 => self.e1[i],
            2 => self.e2[i],
            _ => 0.0,
        }
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        match j - i {
            0 => self.d[i] = v,
            1 => self.e1[i] = v,
            2 => self.e2[i] = v,
            _ => debug_assert!(v.abs() <= f64::MIN_POSITIVE, "fill outside the band"),
        }
    }

    /// `M ← G M Gᵀ` with `G` rotating rows/columns `p` and `p + 1` by `(c, s)`.
    fn rotate(&mut self, p: usize, c: f64, s: f64) {
        let n = self.d.len();
        let q = p + 1;
        let lo = p.saturating_sub(2);
        let hi = (q + 2).min(n - 1);
        for k in lo..=hi {
            if k == p || k == q {
                continue;
            }
            let a = self.get(p, k);
            let b = self.get(q, k);
            self.set(p, k, c * a + s * b);
            self.set(q, k, -s * a + c * b);
        }
        let (app, apq, aqq) = (self.get(p, p), self.get(p, q), self.get(q, q));
        let cc = c * c;
        let ss = s * s;
        let cs = c * s;
        self.set(p, p, cc * app + 2.0 * cs * apq + ss * aqq);
        self.set(q, q, ss * app - 2.0 * cs * apq + cc * aqq);
        self.set(p, q, cs * (aqq - app) + (cc - ss) * apq);
    }
}

fn givens(a: f64, b: f64) -> Option<(f64, f64)> {
    if b == 0.0 {
        return None;
    }
    let h = a.hypot(b);
    Some((a / h, b / h))
}

/// Orthogonally reduces `diag(lambda) - uuᵀ` to symmetric tridiagonal form.
///
/// Entries of `u` are annihilated from the bottom up; each rotation spills a
/// bulge two places off the diagonal that is chased to the end of the band.
/// The rotations never touch the already-zeroed tail of `u`, so the rank-1
/// part ends up as `α² e₁e₁ᵀ` and is folded into the first diagonal entry.
/// Uses `O(n²)` rotations of `O(1)` cost each.
pub fn tridiagonalize_dpr1(lambda: &[f64], u: &[f64]) -> TridiagSym {
    let n = lambda.len();
    assert_eq!(u.len(), n, "lambda and u must have the same length");
    if n == 0 {
        return TridiagSym::new(Vec::new(), Vec::new());
    }
    if n <= 2 {
        let d = (0..n).map(|i| lambda[i] - u[i] * u[i]).collect();
        let e = if n == 2 { vec![-u[0] * u[1]] } else { Vec::new() };
        return TridiagSym::new(d, e);
    }
    let mut band = Band {
        d: lambda.to_vec(),
        e1: vec![0.0; n - 1],
        e2: vec![0.0; n - 2],
    };
    let mut w = u.to_vec();
    for k in (0..n - 1).rev() {
        let Some((c, s)) = givens(w[k], w[k + 1]) else {
            continue;
        };
        w[k] = c * w[k] + s * w[k + 1];
        w[k + 1] = 0.0;
        band.rotate(k, c, s);
        // chase the bulge at (p - 1, p + 1) down the band
        let mut p = k + 1;
        while p + 1 < n {
            let Some((c, s)) = givens(band.get(p - 1, p), band.get(p - 1, p + 1)) else {
                break;
            };
            band.rotate(p, c, s);
            band.set(p - 1, p + 1, 0.0);
            p += 1;
        }
    }
    let mut d = band.d;
    d[0] -= w[0] * w[0];
    TridiagSym::new(d, band.e1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eig::{sym_eig_matrix, tridiag_eig};
    use nalgebra::DMatrix;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / ((1u64 << 53) as f64)
    }

    fn dense_dpr1(lambda: &[f64], u: &[f64]) -> DMatrix<f64> {
        let n = lambda.len();
        DMatrix::from_fn(n, n, |i, j| if i == j { lambda[i] } else { 0.0 } - u[i] * u[j])
    }

    #[test]
    fn aligned_vector_is_already_tridiagonal() {
        let t = tridiagonalize_dpr1(&[3.0, 1.0, 2.0, 5.0], &[2.0, 0.0, 0.0, 0.0]);
        assert_eq!(t.d, vec![-1.0, 1.0, 2.0, 5.0]);
        assert!(t.e.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_by_two_is_returned_directly() {
        let t = tridiagonalize_dpr1(&[1.0, 2.0], &[0.5, 1.0]);
        assert_eq!(t.d, vec![0.75, 1.0]);
        assert_eq!(t.e, vec![-0.5]);
    }

    #[test]
    fn random_spectrum_is_preserved() {
        let mut seed = 7u64;
        for n in [3usize, 5, 12, 31] {
            let lambda: Vec<f64> = (0..n).map(|_| 4.0 * lcg(&mut seed) - 1.0).collect();
            let u: Vec<f64> = (0..n).map(|_| lcg(&mut seed) - 0.5).collect();
            let t = tridiagonalize_dpr1(&lambda, &u);
            let want = sym_eig_matrix(&dense_dpr1(&lambda, &u)).values;
            let dense_t = sym_eig_matrix(&t.to_dense()).values;
            let got = tridiag_eig(&t);
            for k in 0..n {
                assert!((dense_t[k] - want[k]).abs() < 1e-10, "n={n} k={k}");
                assert!((got[k] - want[k]).abs() < 1e-10, "n={n} k={k}");
            }
        }
    }
}
