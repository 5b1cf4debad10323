//! Relaxation solver for the coupled Euler–Lagrange equations.
//!
//! The instanton is centred at t = 0: flipping coordinates are odd in t and
//! the others even, so only t ≥ 0 is solved. That fixes both the overall
//! and the relative time translation. The trapezoid-discretised action is
//! made stationary by damped Newton on its gradient, with a Levenberg shift
//! whenever the block-tridiagonal Hessian is singular or the step stalls.

use serde::{Deserialize, Serialize};

use super::{
    action_two_ways, energy_drift, profile_norms, zero_mode_residual, ClassicalResult, InstantonProfile, Source,
    TimeGrid,
};
use crate::error::{Error, Result};
use crate::model::{derive_rates, hierarchy_check, potential, potential_gradient, potential_hessian};
use crate::model::{ActionParams, Flavor, Grade};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Max-norm of the discrete action gradient at convergence.
    pub tol: f64,
    pub max_iter: usize,
    /// Also solve at half the spacing and extrapolate in h².
    pub richardson: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 200, richardson: true }
    }
}

type Block = [[f64; 2]; 2];

fn inv2(m: &Block) -> Option<Block> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m[0][0].abs().max(m[1][1].abs()).max(m[0][1].abs()).max(1e-300);
    if !det.is_finite() || det.abs() <= 1e-14 * scale * scale {
        return None;
    }
    Some([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
}

fn mulv(m: &Block, v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

struct HalfProblem<'a> {
    params: &'a ActionParams,
    h: f64,
    m: usize,
    odd: [bool; 2],
}

struct HalfSolution {
    x: Vec<[f64; 2]>,
    action: f64,
    grad: f64,
    iterations: usize,
    stable: bool,
}

impl HalfProblem<'_> {
    fn weight(&self, j: usize) -> f64 {
        if j == 0 || j == self.m {
            1.0
        } else {
            2.0
        }
    }

    fn kin(&self) -> [f64; 2] {
        [self.params.a1, self.params.b1]
    }

    fn fixed(&self, j: usize, c: usize) -> bool {
        j == 0 && self.odd[c]
    }

    fn action(&self, x: &[[f64; 2]]) -> f64 {
        let k = self.kin();
        let mut s = 0.0;
        for j in 0..self.m {
            let dp = x[j + 1][0] - x[j][0];
            let dq = x[j + 1][1] - x[j][1];
            s += (k[0] * dp * dp + k[1] * dq * dq) / self.h;
        }
        for (j, v) in x.iter().enumerate() {
            s += self.h * self.weight(j) * potential(self.params, v[0], v[1]);
        }
        s
    }

    fn gradient(&self, x: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let k = self.kin();
        let h = self.h;
        let mut g = vec![[0.0; 2]; self.m];
        for j in 0..self.m {
            let (vp, vq) = potential_gradient(self.params, x[j][0], x[j][1]);
            let vg = [vp, vq];
            for c in 0..2 {
                if self.fixed(j, c) {
                    continue;
                }
                let lap = if j == 0 {
                    x[0][c] - x[1][c]
                } else {
                    2.0 * x[j][c] - x[j - 1][c] - x[j + 1][c]
                };
                g[j][c] = 2.0 * k[c] / h * lap + h * self.weight(j) * vg[c];
            }
        }
        g
    }

    /// Diagonal blocks and the (diagonal) coupling between j and j+1.
    fn hessian(&self, x: &[[f64; 2]], shift: f64) -> (Vec<Block>, Vec<[f64; 2]>) {
        let k = self.kin();
        let h = self.h;
        let mut diag = vec![[[0.0; 2]; 2]; self.m];
        let mut off = vec![[0.0; 2]; self.m.saturating_sub(1)];
        for j in 0..self.m {
            let (vpp, vpq, vqq) = potential_hessian(self.params, x[j][0], x[j][1]);
            let w = h * self.weight(j);
            let lap = if j == 0 { 2.0 } else { 4.0 };
            let mut b = [
                [lap * k[0] / h + w * vpp + shift, w * vpq],
                [w * vpq, lap * k[1] / h + w * vqq + shift],
            ];
            for c in 0..2 {
                if self.fixed(j, c) {
                    b[c] = [0.0; 2];
                    b[0][c] = 0.0;
                    b[1][c] = 0.0;
                    b[c][c] = 1.0;
                }
            }
            diag[j] = b;
            if j + 1 < self.m {
                for c in 0..2 {
                    off[j][c] = if self.fixed(j, c) { 0.0 } else { -2.0 * k[c] / h };
                }
            }
        }
        (diag, off)
    }

    /// Solves H δ = r; also reports whether every pivot block is positive definite.
    fn solve(&self, diag: &[Block], off: &[[f64; 2]], r: &[[f64; 2]]) -> Option<(Vec<[f64; 2]>, bool)> {
        let n = diag.len();
        let mut dinv: Vec<Block> = Vec::with_capacity(n);
        let mut y = vec![[0.0; 2]; n];
        let mut pd = true;
        let mut d = diag[0];
        y[0] = r[0];
        for j in 0..n {
            if j > 0 {
                let b = off[j - 1];
                let pi = &dinv[j - 1];
                d = diag[j];
                for a in 0..2 {
                    for c in 0..2 {
                        d[a][c] -= b[a] * pi[a][c] * b[c];
                    }
                }
                let t = mulv(pi, y[j - 1]);
                y[j] = [r[j][0] - b[0] * t[0], r[j][1] - b[1] * t[1]];
            }
            pd &= d[0][0] > 0.0 && d[0][0] * d[1][1] - d[0][1] * d[1][0] > 0.0;
            dinv.push(inv2(&d)?);
        }
        let mut x = vec![[0.0; 2]; n];
        x[n - 1] = mulv(&dinv[n - 1], y[n - 1]);
        for j in (0..n - 1).rev() {
            let b = off[j];
            let rhs = [y[j][0] - b[0] * x[j + 1][0], y[j][1] - b[1] * x[j + 1][1]];
            x[j] = mulv(&dinv[j], rhs);
        }
        Some((x, pd))
    }

    fn run(&self, mut x: Vec<[f64; 2]>, cfg: &SolverConfig) -> Result<HalfSolution> {
        let norm = |g: &[[f64; 2]]| g.iter().fold(0.0f64, |m, v| m.max(v[0].abs()).max(v[1].abs()));
        let merit = |g: &[[f64; 2]]| g.iter().map(|v| v[0] * v[0] + v[1] * v[1]).sum::<f64>();
        let scale = 4.0 * self.kin()[0].max(self.kin()[1]) / self.h;
        let mut g = self.gradient(&x);
        let mut shift = 0.0;
        let mut polished = false;
        for it in 0..cfg.max_iter {
            let gn = norm(&g);
            if gn <= cfg.tol {
                if polished || gn == 0.0 {
                    let (diag, off) = self.hessian(&x, 0.0);
                    let stable = self.solve(&diag, &off, &g).map(|s| s.1).unwrap_or(false);
                    return Ok(HalfSolution { action: self.action(&x), grad: gn, iterations: it, stable, x });
                }
                polished = true;
            }
            let phi = merit(&g);
            let rhs: Vec<[f64; 2]> = g.iter().map(|v| [-v[0], -v[1]]).collect();
            let mut accepted = false;
            for _ in 0..40 {
                let (diag, off) = self.hessian(&x, shift);
                if let Some((step, _)) = self.solve(&diag, &off, &rhs) {
                    let mut alpha = 1.0;
                    while alpha > 1e-4 {
                        let trial: Vec<[f64; 2]> = x
                            .iter()
                            .enumerate()
                            .map(|(j, v)| {
                                if j < self.m {
                                    [v[0] + alpha * step[j][0], v[1] + alpha * step[j][1]]
                                } else {
                                    *v
                                }
                            })
                            .collect();
                        let gt = self.gradient(&trial);
                        let pt = merit(&gt);
                        if pt.is_finite() && (pt <= (1.0 - 1e-4 * alpha) * phi || (polished && pt <= phi)) {
                            x = trial;
                            g = gt;
                            accepted = true;
                            break;
                        }
                        alpha *= 0.5;
                    }
                }
                if accepted {
                    shift *= 0.1;
                    if shift < 1e-12 * scale {
                        shift = 0.0;
                    }
                    break;
                }
                if polished {
                    // already at tolerance; the polish step is optional
                    accepted = true;
                    break;
                }
                shift = if shift == 0.0 { 1e-6 * scale } else { shift * 10.0 };
            }
            if !accepted {
                return Err(Error::SolverFailed { iterations: it, residual: norm(&g) });
            }
            if polished && norm(&g) <= cfg.tol {
                let (diag, off) = self.hessian(&x, 0.0);
                let stable = self.solve(&diag, &off, &g).map(|s| s.1).unwrap_or(false);
                return Ok(HalfSolution { action: self.action(&x), grad: norm(&g), iterations: it + 1, stable, x });
            }
        }
        Err(Error::SolverFailed { iterations: cfg.max_iter, residual: norm(&g) })
    }
}

fn mirror(flavor: Flavor, x: &[[f64; 2]], grid: &TimeGrid) -> InstantonProfile {
    let (fp, fq) = flavor.flips();
    let m = x.len() - 1;
    let mut p = Vec::with_capacity(2 * m + 1);
    let mut q = Vec::with_capacity(2 * m + 1);
    for j in (1..=m).rev() {
        p.push(if fp { -x[j][0] } else { x[j][0] });
        q.push(if fq { -x[j][1] } else { x[j][1] });
    }
    for v in x {
        p.push(v[0]);
        q.push(v[1]);
    }
    InstantonProfile { flavor, t: grid.times(), p, q, source: Source::Bvp }
}

/// Relaxes the discretised action to its stationary flavor solution.
pub fn solve_bvp(
    flavor: Flavor,
    params: &ActionParams,
    grid: &TimeGrid,
    cfg: &SolverConfig,
) -> Result<(InstantonProfile, ClassicalResult)> {
    let rates = derive_rates(params)?;
    let slow = rates.kappa.min(rates.epsilon);
    if grid.period * slow < 20.0 {
        return Err(Error::InvalidParameters(format!(
            "T·min(κ,ε) = {} < 20: boundary values are not settled",
            grid.period * slow
        )));
    }
    let mut warnings = Vec::new();
    let hier = hierarchy_check(&rates);
    if hier.grade == Grade::Invalid {
        warnings.push(format!(
            "hierarchy invalid: κ/ε = {:.3}, κ²/|μ²| = {:.3}, κ²/|ν²| = {:.3}",
            hier.kappa_over_epsilon, hier.kappa2_over_mu2, hier.kappa2_over_nu2
        ));
    } else if hier.grade == Grade::Marginal {
        warnings.push(format!("hierarchy marginal: κ/ε = {:.3}", hier.kappa_over_epsilon));
    }
    let dip = 2.0 * rates.nu2 / (rates.kappa * rates.epsilon);
    if dip.abs() >= 0.5 {
        warnings.push(format!("ansatz out of range: |2ν²/(κε)| = {:.3} >= 0.5", dip.abs()));
    }

    let (fp, fq) = flavor.flips();
    let odd = [fp, fq];
    let end = [if fp { 1.0 } else { -1.0 }, if fq { 1.0 } else { -1.0 }];
    let rate = [rates.kappa, rates.epsilon];
    let m = grid.half_points();
    let h = grid.spacing();
    let guess = |m: usize, h: f64| -> Vec<[f64; 2]> {
        (0..=m)
            .map(|j| {
                let t = j as f64 * h;
                std::array::from_fn(|c| if odd[c] { (0.5 * rate[c] * t).tanh() } else { -1.0 })
            })
            .collect()
    };
    let pin = |mut x: Vec<[f64; 2]>| {
        let n = x.len() - 1;
        x[n] = end;
        for c in 0..2 {
            if odd[c] {
                x[0][c] = 0.0;
            }
        }
        x
    };

    let coarse = HalfProblem { params, h, m, odd };
    let sc = coarse.run(pin(guess(m, h)), cfg)?;

    let (x, s0, grad, iterations, stable) = if cfg.richardson {
        let fine = HalfProblem { params, h: 0.5 * h, m: 2 * m, odd };
        let start: Vec<[f64; 2]> = (0..=2 * m)
            .map(|i| {
                if i % 2 == 0 {
                    sc.x[i / 2]
                } else {
                    let (a, b) = (sc.x[i / 2], sc.x[i / 2 + 1]);
                    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
                }
            })
            .collect();
        let sf = fine.run(pin(start), cfg)?;
        let x: Vec<[f64; 2]> = (0..=m)
            .map(|j| {
                let (f, c) = (sf.x[2 * j], sc.x[j]);
                [(4.0 * f[0] - c[0]) / 3.0, (4.0 * f[1] - c[1]) / 3.0]
            })
            .collect();
        let s0 = (4.0 * sf.action - sc.action) / 3.0;
        (x, s0, sc.grad.max(sf.grad), sc.iterations + sf.iterations, sc.stable && sf.stable)
    } else {
        (sc.x.clone(), sc.action, sc.grad, sc.iterations, sc.stable)
    };

    let profile = mirror(flavor, &x, grid);
    let (norm_p, norm_q) = profile_norms(&profile);
    let (s_lagrangian, s_norms) = action_two_ways(&profile, params);
    let result = ClassicalResult {
        s0,
        norm_p,
        norm_q,
        euclidean_energy_drift: energy_drift(&profile, params),
        s_lagrangian,
        s_norms,
        zero_mode_residual: zero_mode_residual(&profile, params),
        gradient_norm: grad,
        iterations,
        stable,
        warnings,
    };
    Ok((profile, result))
}
