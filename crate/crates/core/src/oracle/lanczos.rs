use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix, diagonal `d` and off-diagonal `e`.
pub(crate) struct Tridiagonal {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
}

impl Tridiagonal {
    /// Number of eigenvalues strictly below x (Sturm sequence).
    fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.d.len() {
            let off = if i == 0 { 0.0 } else { self.e[i - 1] * self.e[i - 1] / q };
            q = self.d[i] - x - off;
            if q == 0.0 {
                q = -f64::EPSILON * (self.d[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The k lowest eigenvalues by bisection.
    pub fn lowest(&self, k: usize) -> Vec<f64> {
        let n = self.d.len();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let r = if i > 0 { self.e[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.e[i].abs() } else { 0.0 };
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (0..k.min(n))
            .map(|j| {
                let (mut a, mut b) = (lo, hi);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    if self.count_below(mid) > j {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                0.5 * (a + b)
            })
            .collect()
    }
}

/// Cholesky factor of a symmetric positive-definite band matrix, stored
/// row-wise: row r holds columns r−bw ..= r.
pub(crate) struct BandCholesky {
    n: usize,
    bw: usize,
    rows: Vec<f64>,
}

impl BandCholesky {
    /// `entry(r, k)` returns A[r][r−k] for k in 0..=bw.
    pub fn factor(n: usize, bw: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let w = bw + 1;
        let mut rows = vec![0.0; n * w];
        for r in 0..n {
            for k in (0..=bw.min(r)).rev() {
                let c = r - k;
                // s runs over max(r−bw, 0)..c, in both rows' local coordinates
                let s0 = r.saturating_sub(bw);
                let len = c - s0;
                let ro = s0 + bw - r;
                let co = s0 + bw - c;
                let dot: f64 = {
                    let (a, b) = (&rows[r * w + ro..r * w + ro + len], &rows[c * w + co..c * w + co + len]);
                    a.iter().zip(b).map(|(x, y)| x * y).sum()
                };
                let val = entry(r, k) - dot;
                if k == 0 {
                    if val <= 0.0 || !val.is_finite() {
                        return Err(Error::EigenSolver(format!("shifted operator not positive definite at row {r}")));
                    }
                    rows[r * w + bw] = val.sqrt();
                } else {
                    rows[r * w + bw - k] = val / rows[c * w + bw];
                }
            }
        }
        Ok(Self { n, bw, rows })
    }

    pub fn solve(&self, b: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for r in 0..n {
            let s0 = r.saturating_sub(bw);
            let row = &self.rows[r * w..(r + 1) * w];
            let mut acc = b[r];
            for s in s0..r {
                acc -= row[s + bw - r] * b[s];
            }
            b[r] = acc / row[bw];
        }
        for r in (0..n).rev() {
            let row = &self.rows[r * w..(r + 1) * w];
            b[r] /= row[bw];
            let x = b[r];
            for s in r.saturating_sub(bw)..r {
                b[s] -= row[s + bw - r] * x;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lowest `k` eigenvalues of H from Lanczos on (H − σ)⁻¹ with full
/// reorthogonalisation. σ must lie below the spectrum.
pub(crate) fn shift_invert_lowest(chol: &BandCholesky, sigma: f64, k: usize, seed: u64) -> Result<Vec<f64>> {
    let n = chol.n;
    let k = k.min(n);
    let max_steps = n.min(40 + 12 * k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);

    let mut basis: Vec<Vec<f64>> = vec![v];
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let mut last = Vec::new();
    for step in 0..max_steps {
        let mut w = basis[step].clone();
        chol.solve(&mut w);
        let a = dot(&w, &basis[step]);
        alpha.push(a);
        for _ in 0..2 {
            for b in &basis {
                let proj = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
            }
        }
        let bnext = dot(&w, &w).sqrt();
        let m = alpha.len();
        if m >= k && (m % 4 == 0 || bnext < 1e-300 || step + 1 == max_steps) {
            let mut t = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alpha[i];
                if i + 1 < m {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let mut idx: Vec<usize> = (0..m).collect();
            idx.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
            let mut ok = true;
            let mut vals = Vec::with_capacity(k);
            for &i in idx.iter().take(k) {
                let theta = eig.eigenvalues[i];
                let resid = (bnext * eig.eigenvectors[(m - 1, i)]).abs();
                if theta <= 0.0 || resid > 1e-11 * theta {
                    ok = false;
                }
                vals.push(sigma + 1.0 / theta);
            }
            if ok || bnext < 1e-300 {
                return Ok(vals);
            }
            last = vals;
        }
        if bnext < 1e-300 {
            break;
        }
        beta.push(bnext);
        w.iter_mut().for_each(|x| *x /= bnext);
        basis.push(w);
    }
    Err(Error::EigenSolver(format!("Lanczos stalled after {max_steps} steps; last Ritz values {last:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sturm_on_laplacian() {
        let n = 50;
        let t = Tridiagonal { d: vec![2.0; n], e: vec![-1.0; n - 1] };
        let got = t.lowest(3);
        for (j, g) in got.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (j + 1) as f64 / (n + 1) as f64).cos();
            assert!((g - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn band_cholesky_solves() {
        // 2-D Laplacian plus identity on a 6x5 grid
        let (np, nq) = (6, 5);
        let n = np * nq;
        let entry = |r: usize, k: usize| match k {
            0 => 5.0,
            1 if r % nq != 0 => -1.0,
            k if k == nq => -1.0,
            _ => 0.0,
        };
        let chol = BandCholesky::factor(n, nq, entry).unwrap();
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; n];
        for r in 0..n {
            b[r] += 5.0 * x[r];
            if r % nq != 0 {
                b[r] -= x[r - 1];
                b[r - 1] -= x[r];
            }
            if r >= nq {
                b[r] -= x[r - nq];
                b[r - nq] -= x[r];
            }
        }
        chol.solve(&mut b);
        for i in 0..n {
            assert!((b[i] - x[i]).abs() < 1e-13);
        }
        let vals = shift_invert_lowest(&chol, 0.0, 3, 1).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }
}
