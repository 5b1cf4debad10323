//! Quadratic fluctuations: the zero-instanton prefactor R0, the
//! determinant correction F_c, and the per-flavor rates K.

use serde::{Deserialize, Serialize};

use crate::classical::{action_analytic, analytic_point, norms_analytic, solve_bvp, SolverConfig, TimeGrid};
use crate::error::{Error, Result};
use crate::greens::{green, zero_mode, PropagatorSpec};
use crate::model::{derive_rates, ActionParams, Flavor, Rates};
use crate::quad::{integrate_term, QuadConfig};

/// Exponent of R0 per unit time: −(κ+ε)/2 + μ²ν²/(κε(κ+ε)).
pub fn r0_rate(r: &Rates) -> f64 {
    -0.5 * (r.kappa + r.epsilon) + r.mu2 * r.nu2 / (r.kappa * r.epsilon * (r.kappa + r.epsilon))
}

/// ln R0(T) for vacuum positions x0, y0 (1 in the dimensionless action).
pub fn log_r0(params: &ActionParams, t: f64, x0: f64, y0: f64) -> Result<f64> {
    let r = derive_rates(params)?;
    let pi = std::f64::consts::PI;
    let na = 0.25 * (2.0 * params.a1 * params.a2).ln() - 0.5 * pi.ln() - x0.ln();
    let nb = 0.25 * (2.0 * params.b1 * params.b2).ln() - 0.5 * pi.ln() - y0.ln();
    Ok(na + nb + r0_rate(&r) * t)
}

pub fn r0(params: &ActionParams, t: f64, x0: f64, y0: f64) -> Result<f64> {
    log_r0(params, t, x0, y0).map(f64::exp)
}

/// Closed-form second-order determinant corrections.
pub fn fc_closed(flavor: Flavor, r: &Rates) -> f64 {
    let (k, e, m2, n2) = (r.kappa, r.epsilon, r.mu2, r.nu2);
    let ke = k * e;
    let k2e2 = ke * ke;
    let k3e = k.powi(3) * e;
    match flavor {
        Flavor::P => 1.0 + 5.0 * n2 / (8.0 * ke) - 2.0 * m2 * n2 / k2e2 + 75.0 * n2 * n2 / (128.0 * k2e2),
        Flavor::Q => 1.0 + m2 / ke + m2 * m2 / (2.0 * k2e2) + m2 * m2 / (6.0 * k3e) - 2.0 * m2 * n2 / k2e2,
        Flavor::R => {
            1.0 + m2 / ke + n2 / ke + m2 * m2 / (2.0 * k2e2) + 57.0 * n2 * n2 / (64.0 * k2e2) + m2 * m2 / (6.0 * k3e)
                - 9.0 * m2 * n2 / (2.0 * k2e2)
                + 2.0 * m2 * n2 / k3e
                + 5.0 * m2 * n2 * 4f64.ln() / (2.0 * k2e2)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FcConfig {
    /// Integration window; `None` means 40/ε.
    pub window: Option<f64>,
    pub quad: QuadConfig,
    /// Subtract the vacuum value of p·q from the W kernel.
    pub subtract_vacuum: bool,
}

impl Default for FcConfig {
    fn default() -> Self {
        Self { window: None, quad: QuadConfig::default(), subtract_vacuum: true }
    }
}

/// The individual second-order pieces of F_c.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FcTerms {
    /// ∫ k_U G_κ(t,t)
    pub i_u: f64,
    /// ∫ k_V G_ε(t,t)
    pub i_v: f64,
    /// ∫∫ k_U G_κ² k_U
    pub j_u: f64,
    /// ∫∫ k_V G_ε² k_V
    pub j_v: f64,
    /// ∫∫ k_W G_κ G_ε k_W
    pub j_w: f64,
    pub total: f64,
}

impl FcTerms {
    fn assemble(i_u: f64, i_v: f64, j_u: f64, j_v: f64, j_w: f64) -> Self {
        let total = 1.0 - i_u + 0.5 * i_u * i_u + j_u - i_v + 0.5 * i_v * i_v + j_v + 0.5 * j_w;
        Self { i_u, i_v, j_u, j_v, j_w, total }
    }
}

struct Kernels {
    flavor: Flavor,
    rates: Rates,
    subtract: bool,
}

impl Kernels {
    fn u(&self, t: f64) -> f64 {
        let (_, q) = analytic_point(self.flavor, &self.rates, t);
        0.5 * self.rates.mu2 * (q * q - 1.0)
    }

    fn v(&self, t: f64) -> f64 {
        let (p, _) = analytic_point(self.flavor, &self.rates, t);
        0.5 * self.rates.nu2 * (p * p - 1.0)
    }

    fn w(&self, t: f64) -> f64 {
        let (p, q) = analytic_point(self.flavor, &self.rates, t);
        let vac = if self.subtract {
            let ((p0, q0), (p1, q1)) = self.flavor.boundary();
            if t < 0.0 {
                p0 * q0
            } else if t > 0.0 {
                p1 * q1
            } else {
                0.5 * (p0 * q0 + p1 * q1)
            }
        } else {
            0.0
        };
        2.0 * self.rates.mu_nu() * (p * q - vac)
    }
}

fn breaks_around(t: f64, scales: &[f64]) -> Vec<f64> {
    let mut b = vec![t, 0.0];
    for &s in scales {
        for m in [1.0, 4.0, 16.0] {
            b.push(t - m * s);
            b.push(t + m * s);
        }
    }
    b
}

fn single<K: Fn(f64) -> f64>(name: &str, k: K, g: &PropagatorSpec, half: f64, rates: &Rates, q: &QuadConfig) -> Result<f64> {
    let brk = breaks_around(0.0, &[1.0 / rates.kappa, 1.0 / rates.epsilon]);
    integrate_term(name, |t| k(t) * green(g, t, t), -half, half, &brk, q)
}

#[allow(clippy::too_many_arguments)]
fn double<K: Fn(f64) -> f64>(
    name: &str,
    k: K,
    g1: &PropagatorSpec,
    g2: &PropagatorSpec,
    half: f64,
    rates: &Rates,
    q: &QuadConfig,
) -> Result<f64> {
    let inner_cfg = QuadConfig { abs_tol: 0.01 * q.abs_tol, ..*q };
    let scales = [1.0 / rates.kappa, 1.0 / rates.epsilon];
    let mut failure = None;
    let outer = integrate_term(
        name,
        |t| {
            let kt = k(t);
            if kt == 0.0 {
                return 0.0;
            }
            let brk = breaks_around(t, &scales);
            match integrate_term(name, |s| green(g1, t, s) * green(g2, t, s) * k(s), -half, half, &brk, &inner_cfg) {
                Ok(v) => kt * v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        -half,
        half,
        &breaks_around(0.0, &scales),
        q,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(outer),
    }
}

/// Second-order F_c by quadrature over the closed-form profiles.
pub fn fc_numeric(flavor: Flavor, rates: &Rates, cfg: &FcConfig) -> Result<FcTerms> {
    if rates.mu2 == 0.0 && rates.nu2 == 0.0 {
        return Ok(FcTerms::assemble(0.0, 0.0, 0.0, 0.0, 0.0));
    }
    let half = 0.5 * cfg.window.unwrap_or(40.0 / rates.epsilon);
    let gk = PropagatorSpec::new(rates.kappa);
    let ge = PropagatorSpec::new(rates.epsilon);
    let ker = Kernels { flavor, rates: *rates, subtract: cfg.subtract_vacuum };
    let q = &cfg.quad;
    let i_u = single("I_U", |t| ker.u(t), &gk, half, rates, q)?;
    let i_v = single("I_V", |t| ker.v(t), &ge, half, rates, q)?;
    let j_u = double("J_U", |t| ker.u(t), &gk, &gk, half, rates, q)?;
    let j_v = double("J_V", |t| ker.v(t), &ge, &ge, half, rates, q)?;
    let j_w = double("J_W", |t| ker.w(t), &gk, &ge, half, rates, q)?;
    Ok(FcTerms::assemble(i_u, i_v, j_u, j_v, j_w))
}

/// The W² contribution alone, optionally without the vacuum subtraction.
pub fn fc_w_term(flavor: Flavor, rates: &Rates, cfg: &FcConfig) -> Result<f64> {
    let half = 0.5 * cfg.window.unwrap_or(40.0 / rates.epsilon);
    let ker = Kernels { flavor, rates: *rates, subtract: cfg.subtract_vacuum };
    let gk = PropagatorSpec::new(rates.kappa);
    let ge = PropagatorSpec::new(rates.epsilon);
    double("J_W", |t| ker.w(t), &gk, &ge, half, rates, &cfg.quad).map(|v| 0.5 * v)
}

/// Zero-mode matrix element ∫ φ₀^κ k_W φ₀^ε dt; odd in t for P and Q.
pub fn w_zero_mode_element(flavor: Flavor, rates: &Rates, cfg: &FcConfig) -> Result<f64> {
    let half = 0.5 * cfg.window.unwrap_or(40.0 / rates.epsilon);
    let ker = Kernels { flavor, rates: *rates, subtract: cfg.subtract_vacuum };
    let brk = breaks_around(0.0, &[1.0 / rates.kappa, 1.0 / rates.epsilon]);
    integrate_term(
        "W_00",
        |t| zero_mode(rates.kappa, t) * ker.w(t) * zero_mode(rates.epsilon, t),
        -half,
        half,
        &brk,
        &cfg.quad,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlavorResult {
    pub flavor: Flavor,
    #[serde(rename = "S0")]
    pub s0: f64,
    pub norm_p: f64,
    pub norm_q: f64,
    #[serde(rename = "Fc")]
    pub fc: f64,
    #[serde(rename = "K")]
    pub k: f64,
}

/// Jacobian-weighted fluctuation factor of each flipping coordinate:
/// √12 × rate × √(kinetic weight), multiplied over the flipping sectors.
pub fn flip_factor(flavor: Flavor, params: &ActionParams, r: &Rates) -> f64 {
    let s12 = 12f64.sqrt();
    match flavor {
        Flavor::P => s12 * r.kappa * params.a1.sqrt(),
        Flavor::Q => s12 * r.epsilon * params.b1.sqrt(),
        Flavor::R => 12.0 * r.kappa * r.epsilon * (params.a1 * params.b1).sqrt(),
    }
}

/// K = flip_factor · S0 e^{−S0} F_c / (√(2π) (a1‖ṗ‖ + b1‖q̇‖)).
pub fn k_from_parts(flavor: Flavor, params: &ActionParams, s0: f64, norm_p: f64, norm_q: f64, fc: f64) -> Result<f64> {
    if norm_p < 0.0 || norm_q < 0.0 || !(s0 > 0.0) {
        return Err(Error::InvalidParameters(format!(
            "{flavor}: S0 = {s0}, norms = ({norm_p}, {norm_q}) outside the perturbative domain"
        )));
    }
    let r = derive_rates(params)?;
    let den = (2.0 * std::f64::consts::PI).sqrt() * (params.a1 * norm_p.sqrt() + params.b1 * norm_q.sqrt());
    Ok(flip_factor(flavor, params, &r) * s0 * (-s0).exp() * fc / den)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KMode {
    /// S0 and norms from the closed forms.
    Closed,
    /// S0 and norms from the relaxation solver.
    Bvp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FcSource {
    Closed,
    Numeric,
}

#[derive(Clone, Copy, Debug)]
pub struct KConfig {
    pub mode: KMode,
    pub fc: FcSource,
    /// Grid for bvp mode; `None` picks [`TimeGrid::for_rates`].
    pub grid: Option<TimeGrid>,
    pub solver: SolverConfig,
    pub fc_cfg: FcConfig,
}

impl Default for KConfig {
    fn default() -> Self {
        Self {
            mode: KMode::Closed,
            fc: FcSource::Closed,
            grid: None,
            solver: SolverConfig::default(),
            fc_cfg: FcConfig::default(),
        }
    }
}

pub fn k_factor(flavor: Flavor, params: &ActionParams, cfg: &KConfig) -> Result<FlavorResult> {
    let r = derive_rates(params)?;
    let (s0, norm_p, norm_q) = match cfg.mode {
        KMode::Closed => {
            let (np, nq) = norms_analytic(flavor, &r);
            (action_analytic(flavor, params), np, nq)
        }
        KMode::Bvp => {
            let grid = cfg.grid.unwrap_or_else(|| TimeGrid::for_rates(&r));
            let (_, res) = solve_bvp(flavor, params, &grid, &cfg.solver)?;
            (res.s0, res.norm_p, res.norm_q)
        }
    };
    let fc = match cfg.fc {
        FcSource::Closed => fc_closed(flavor, &r),
        FcSource::Numeric => fc_numeric(flavor, &r, &cfg.fc_cfg)?.total,
    };
    let k = k_from_parts(flavor, params, s0, norm_p, norm_q, fc)?;
    Ok(FlavorResult { flavor, s0, norm_p, norm_q, fc, k })
}
