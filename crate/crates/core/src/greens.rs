//! Zero-mode-projected Green's function of the Pöschl–Teller operator
//! L = −d²/dt² + κ²(1 − (3/2) sech²(κt/2)).

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadConfig};

/// The value of c0 that makes G orthogonal to the zero mode.
pub const C0_PAPER: f64 = -8.0;

/// Smallest κt for which [`f_aux`] is evaluated.
pub const F_AUX_MIN_ARG: f64 = -350.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagatorSpec {
    pub kappa: f64,
    pub c0: f64,
    pub c1: f64,
}

impl PropagatorSpec {
    /// Propagator with the orthogonality-fixed homogeneous coefficient.
    pub fn new(kappa: f64) -> Self {
        Self { kappa, c0: C0_PAPER, c1: 0.0 }
    }

    /// Particular solution only.
    pub fn particular(kappa: f64) -> Self {
        Self { kappa, c0: 0.0, c1: 0.0 }
    }

    pub fn eval(&self, t: f64, tp: f64) -> f64 {
        green(self, t, tp)
    }
}

/// e^{−2κt} + 8e^{−κt} − 6κt
pub fn f_aux(kappa: f64, t: f64) -> Result<f64> {
    let x = kappa * t;
    if x < F_AUX_MIN_ARG {
        return Err(Error::Overflow(format!("f_aux at kappa*t = {x}")));
    }
    Ok((-2.0 * x).exp() + 8.0 * (-x).exp() - 6.0 * x)
}

/// sech²(x/2) without overflow.
fn sech2_half(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

/// Normalized zero mode φ₀(t) = √(3κ/8) sech²(κt/2).
pub fn zero_mode(kappa: f64, t: f64) -> f64 {
    (0.375 * kappa).sqrt() * sech2_half(kappa * t)
}

/// φ₀(t) φ₀(t') = (3κ/8) sech²(κt/2) sech²(κt'/2)
pub fn zero_mode_product(kappa: f64, t: f64, tp: f64) -> f64 {
    0.375 * kappa * sech2_half(kappa * t) * sech2_half(kappa * tp)
}

/// G(t,t') = F(t,t')/(12κ²) · [f(t_>) + f(−t_<) + c0], with every exponential
/// combined with the sech² decay before evaluation so that no intermediate
/// overflows.
pub fn green(spec: &PropagatorSpec, t: f64, tp: f64) -> f64 {
    let k = spec.kappa;
    let (hi, lo) = if t >= tp { (t, tp) } else { (tp, t) };
    let a = (k * t).abs();
    let b = (k * tp).abs();
    let base = -a - b;
    let ea = 1.0 + (-a).exp();
    let eb = 1.0 + (-b).exp();
    let den = ea * ea * eb * eb;
    let x = k * hi;
    let y = k * lo;
    let terms = (base - 2.0 * x).exp()
        + 8.0 * (base - x).exp()
        + (base + 2.0 * y).exp()
        + 8.0 * (base + y).exp()
        + (6.0 * (y - x) + spec.c0) * base.exp();
    // (3κ/8)·16/(12κ²) = 1/(2κ)
    terms / den / (2.0 * k)
}

/// Equal-time propagator G(t,t) for the calibrated c0 = −8.
pub fn green_diagonal(kappa: f64, t: f64) -> f64 {
    green(&PropagatorSpec::new(kappa), t, t)
}

/// Homogeneous term F(t,t')/(12κ²) that c0 multiplies.
fn homogeneous(kappa: f64, t: f64, tp: f64) -> f64 {
    zero_mode_product(kappa, t, tp) / (12.0 * kappa * kappa)
}

/// Fixes c0 from ∫ G(t,t') φ₀(t') dt' = 0 at several sample times.
pub fn calibrate_c0(kappa: f64, cfg: &QuadConfig) -> Result<f64> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::CalibrationFailed(format!("kappa must be positive, got {kappa}")));
    }
    let part = PropagatorSpec::particular(kappa);
    let w = 80.0 / kappa;
    let samples = [0.0, 1.0 / kappa, -1.0 / kappa, 4.0 / kappa, -4.0 / kappa];
    let mut vals = Vec::with_capacity(samples.len());
    for &t in &samples {
        let brk = [t, 0.0];
        let num = integrate(|s| part.eval(t, s) * zero_mode(kappa, s), -w, w, &brk, cfg)
            .map_err(|r| Error::CalibrationFailed(format!("projection at t={t}: error {:e}", r.error)))?;
        let den = integrate(|s| homogeneous(kappa, t, s) * zero_mode(kappa, s), -w, w, &brk, cfg)
            .map_err(|r| Error::CalibrationFailed(format!("normalization at t={t}: error {:e}", r.error)))?;
        vals.push(-num.value / den.value);
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let spread = vals.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if spread > 1e-6 * mean.abs().max(1.0) {
        return Err(Error::CalibrationFailed(format!("c0 depends on the sample time: {vals:?}")));
    }
    Ok(mean)
}

/// |∫ G(t,t') φ₀(t') dt'| for a given propagator.
pub fn orthogonality_defect(spec: &PropagatorSpec, t: f64, cfg: &QuadConfig) -> Result<f64> {
    let k = spec.kappa;
    let w = 80.0 / k;
    integrate(|s| spec.eval(t, s) * zero_mode(k, s), -w, w, &[t, 0.0], cfg)
        .map(|r| r.value.abs())
        .map_err(|r| Error::CalibrationFailed(format!("orthogonality at t={t}: error {:e}", r.error)))
}
