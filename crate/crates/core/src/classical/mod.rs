//! Classical instanton profiles: closed forms, a boundary-value relaxation
//! solver, and conservation checks on either.

mod analytic;
mod bvp;

pub use analytic::{action_analytic, analytic_point, analytic_profile, norms_analytic, r_back_reaction};
pub use bvp::{solve_bvp, SolverConfig};

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{Error, Result};
use crate::model::{potential, ActionParams, Flavor, Rates};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Analytic,
    Bvp,
}

/// Uniform symmetric time grid on [−T/2, T/2] with an odd number of points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub period: f64,
    pub points: usize,
}

impl TimeGrid {
    pub fn new(period: f64, points: usize) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidParameters(format!("period must be positive, got {period}")));
        }
        if points < 5 || points % 2 == 0 {
            return Err(Error::InvalidParameters(format!("grid needs an odd count >= 5, got {points}")));
        }
        Ok(Self { period, points })
    }

    /// T = 40/min(κ,ε) with spacing at most 0.02/max(κ,ε).
    pub fn for_rates(rates: &Rates) -> Self {
        let period = 40.0 / rates.kappa.min(rates.epsilon);
        Self::with_spacing(period, 0.02 / rates.kappa.max(rates.epsilon))
    }

    /// Grid over `period` whose spacing does not exceed `h`.
    pub fn with_spacing(period: f64, h: f64) -> Self {
        let half = (0.5 * period / h).ceil().max(2.0) as usize;
        Self { period, points: 2 * half + 1 }
    }

    pub fn half_points(&self) -> usize {
        (self.points - 1) / 2
    }

    pub fn spacing(&self) -> f64 {
        self.period / (self.points - 1) as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let m = self.half_points() as i64;
        let h = self.spacing();
        (-m..=m).map(|j| j as f64 * h).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstantonProfile {
    pub flavor: Flavor,
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub source: Source,
}

impl InstantonProfile {
    pub fn spacing(&self) -> f64 {
        self.t[1] - self.t[0]
    }

    /// The anti-instanton: t → −t.
    pub fn time_reversed(&self) -> Self {
        let mut out = self.clone();
        out.p.reverse();
        out.q.reverse();
        out
    }

    /// Largest deviation of the end values from the flavor's boundary table.
    pub fn boundary_defect(&self) -> f64 {
        let ((p0, q0), (p1, q1)) = self.flavor.boundary();
        let n = self.t.len() - 1;
        [self.p[0] - p0, self.q[0] - q0, self.p[n] - p1, self.q[n] - q1]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,p,q")?;
        for i in 0..self.t.len() {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", self.t[i], self.p[i], self.q[i])?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalResult {
    #[serde(rename = "S0")]
    pub s0: f64,
    pub norm_p: f64,
    pub norm_q: f64,
    pub euclidean_energy_drift: f64,
    pub s_lagrangian: f64,
    pub s_norms: f64,
    pub zero_mode_residual: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    /// Whether the discrete Hessian at the solution is positive definite.
    pub stable: bool,
    pub warnings: Vec<String>,
}

/// Fourth-order first derivative on a uniform grid; one-sided at the ends.
pub(crate) fn derivative(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    assert!(n >= 5);
    let mut d = vec![0.0; n];
    for i in 2..n - 2 {
        d[i] = (y[i - 2] - 8.0 * y[i - 1] + 8.0 * y[i + 1] - y[i + 2]) / (12.0 * h);
    }
    let fwd = |y: &[f64], s: f64| {
        s * (-25.0 * y[0] + 48.0 * y[1] - 36.0 * y[2] + 16.0 * y[3] - 3.0 * y[4]) / (12.0 * h)
    };
    let fwd2 = |y: &[f64], s: f64| s * (-3.0 * y[0] - 10.0 * y[1] + 18.0 * y[2] - 6.0 * y[3] + y[4]) / (12.0 * h);
    d[0] = fwd(&y[0..5], 1.0);
    d[1] = fwd2(&y[0..5], 1.0);
    let r: Vec<f64> = y[n - 5..].iter().rev().copied().collect();
    d[n - 1] = fwd(&r, -1.0);
    d[n - 2] = fwd2(&r, -1.0);
    d
}

/// Fourth-order second derivative at interior points (zero in the two
/// outermost slots at each end).
pub(crate) fn second_derivative(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut d = vec![0.0; n];
    for i in 2..n - 2 {
        d[i] = (-y[i - 2] + 16.0 * y[i - 1] - 30.0 * y[i] + 16.0 * y[i + 1] - y[i + 2]) / (12.0 * h * h);
    }
    d
}

/// Composite Simpson rule; requires an odd number of samples.
pub(crate) fn simpson(y: &[f64], h: f64) -> f64 {
    let n = y.len();
    debug_assert!(n % 2 == 1);
    let mut s = y[0] + y[n - 1];
    for (i, v) in y.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

/// E(t) = −a1/2 ṗ² − b1/2 q̇² + V(p,q), conserved along classical paths.
pub fn euclidean_energy(profile: &InstantonProfile, params: &ActionParams) -> Vec<f64> {
    let h = profile.spacing();
    let dp = derivative(&profile.p, h);
    let dq = derivative(&profile.q, h);
    (0..profile.t.len())
        .map(|i| {
            -0.5 * params.a1 * dp[i] * dp[i] - 0.5 * params.b1 * dq[i] * dq[i]
                + potential(params, profile.p[i], profile.q[i])
        })
        .collect()
}

/// (∫ a1 ṗ², ∫ b1 q̇²)/(a1, b1), i.e. the squared norms.
pub fn profile_norms(profile: &InstantonProfile) -> (f64, f64) {
    let h = profile.spacing();
    let sq = |y: &[f64]| simpson(&derivative(y, h).iter().map(|v| v * v).collect::<Vec<_>>(), h);
    (sq(&profile.p), sq(&profile.q))
}

/// The action evaluated as the full Lagrangian integral and as
/// a1‖ṗ‖² + b1‖q̇‖².
pub fn action_two_ways(profile: &InstantonProfile, params: &ActionParams) -> (f64, f64) {
    let h = profile.spacing();
    let dp = derivative(&profile.p, h);
    let dq = derivative(&profile.q, h);
    let lag: Vec<f64> = (0..profile.t.len())
        .map(|i| {
            0.5 * params.a1 * dp[i] * dp[i]
                + 0.5 * params.b1 * dq[i] * dq[i]
                + potential(params, profile.p[i], profile.q[i])
        })
        .collect();
    let (np, nq) = profile_norms(profile);
    (simpson(&lag, h), params.a1 * np + params.b1 * nq)
}

/// max |M (ṗ, q̇)| / max |(ṗ, q̇)| with M the halved second variation.
pub fn zero_mode_residual(profile: &InstantonProfile, params: &ActionParams) -> f64 {
    let h = profile.spacing();
    let dp = derivative(&profile.p, h);
    let dq = derivative(&profile.q, h);
    let ddp = second_derivative(&dp, h);
    let ddq = second_derivative(&dq, h);
    let n = profile.t.len();
    let (mut res, mut scale) = (0.0f64, 0.0f64);
    for i in 0..n {
        scale = scale.max(dp[i].abs()).max(dq[i].abs());
    }
    let c = params.c;
    for i in 4..n - 4 {
        let (p, q) = (profile.p[i], profile.q[i]);
        let rp = -0.5 * params.a1 * ddp[i]
            + (0.5 * params.a2 * (3.0 * p * p - 1.0) + 0.5 * c * (q * q - 1.0)) * dp[i]
            + c * p * q * dq[i];
        let rq = -0.5 * params.b1 * ddq[i]
            + (0.5 * params.b2 * (3.0 * q * q - 1.0) + 0.5 * c * (p * p - 1.0)) * dq[i]
            + c * p * q * dp[i];
        res = res.max(rp.abs()).max(rq.abs());
    }
    if scale == 0.0 {
        0.0
    } else {
        res / scale
    }
}

/// max_t |E(t) − E(boundary)|
pub fn energy_drift(profile: &InstantonProfile, params: &ActionParams) -> f64 {
    let e = euclidean_energy(profile, params);
    let e0 = 0.5 * (e[0] + e[e.len() - 1]);
    e.iter().fold(0.0f64, |m, v| m.max((v - e0).abs()))
}
