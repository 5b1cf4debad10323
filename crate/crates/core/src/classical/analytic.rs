use super::{InstantonProfile, Source, TimeGrid};
use crate::error::{Error, Result};
use crate::model::{ActionParams, Flavor, Rates};

fn sech2(x: f64) -> f64 {
    let e = (-2.0 * x.abs()).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

/// Back-reaction of the fast flip on q in the R flavor,
/// (4ν²/κ²)[κ|t|/2 − ln(2 cosh(κt/2))] = −(4ν²/κ²) ln(1 + e^{−κ|t|}).
pub fn r_back_reaction(rates: &Rates, t: f64) -> f64 {
    -4.0 * rates.nu2 / (rates.kappa * rates.kappa) * (-(rates.kappa * t).abs()).exp().ln_1p()
}

fn check(rates: &Rates) -> Result<()> {
    let ok = |v: f64| v.is_finite() && v > 0.0;
    if !ok(rates.kappa) || !ok(rates.epsilon) || !rates.mu2.is_finite() || !rates.nu2.is_finite() {
        return Err(Error::InvalidParameters(format!("rates out of domain: {rates:?}")));
    }
    Ok(())
}

/// Closed-form (p, q) at time t.
pub fn analytic_point(flavor: Flavor, r: &Rates, t: f64) -> (f64, f64) {
    let (k, e, m2, n2) = (r.kappa, r.epsilon, r.mu2, r.nu2);
    match flavor {
        Flavor::P => {
            let decay = (-e * t.abs()).exp();
            let q = -1.0 - 2.0 * n2 / (k * e) * decay;
            let p = (1.0 - 4.0 * m2 * n2 / (k.powi(3) * e) * decay) * (0.5 * k * t).tanh();
            (p, q)
        }
        Flavor::Q => {
            let s = sech2(0.5 * e * t);
            let p = -1.0 - m2 / (k * k) * s;
            let q = (0.5 * e * t).tanh() - m2 * n2 / (e * k * k) * t * s;
            (p, q)
        }
        Flavor::R => {
            let p = (1.0 + m2 / (k * k) * sech2(0.5 * e * t)) * (0.5 * k * t).tanh();
            let q = (1.0 + r_back_reaction(r, t)) * (0.5 * e * t).tanh();
            (p, q)
        }
    }
}

/// Closed-form profile centred at the grid midpoint.
pub fn analytic_profile(flavor: Flavor, rates: &Rates, grid: &TimeGrid) -> Result<InstantonProfile> {
    check(rates)?;
    let t = grid.times();
    let (p, q): (Vec<f64>, Vec<f64>) = t.iter().map(|&s| analytic_point(flavor, rates, s)).unzip();
    Ok(InstantonProfile { flavor, t, p, q, source: Source::Analytic })
}

/// Closed-form squared norms (‖ṗ‖², ‖q̇‖²).
pub fn norms_analytic(flavor: Flavor, r: &Rates) -> (f64, f64) {
    let (k, e, m2, n2) = (r.kappa, r.epsilon, r.mu2, r.nu2);
    match flavor {
        Flavor::P => (
            2.0 * k / 3.0 - 16.0 * m2 * n2 / (3.0 * k * k * e),
            4.0 * n2 * n2 / (k * k * e),
        ),
        Flavor::Q => (
            8.0 * e * m2 * m2 / (15.0 * k.powi(4)),
            2.0 * e / 3.0 - 4.0 * m2 * n2 / (3.0 * e * k * k),
        ),
        Flavor::R => (
            2.0 * k / 3.0 * (1.0 + 4.0 * m2 / (k * k)),
            2.0 * e / 3.0 * (1.0 + 6.0 * e * n2 / k.powi(3)),
        ),
    }
}

/// Closed-form actions through the printed order in c.
pub fn action_analytic(flavor: Flavor, a: &ActionParams) -> f64 {
    let sp = (8.0 * a.a1 * a.a2 / 9.0).sqrt();
    let sq = (8.0 * a.b1 * a.b2 / 9.0).sqrt();
    let c = a.c;
    match flavor {
        Flavor::P => sp * (1.0 - a.a1.sqrt() / (2.0 * a.a2.powf(1.5) * (a.b1 * a.b2).sqrt()) * c * c),
        Flavor::Q => sq * (1.0 + (2.0 * a.a1 / a.b1 - 5.0 * a.a2 / a.b2) / (10.0 * a.a2 * a.a2) * c * c),
        Flavor::R => {
            sp + sq
                + 4.0 / 3.0 * (2.0 * a.a1 / a.a2).sqrt() * (1.0 + 1.5 * a.a1 * a.b2 / (a.a2 * a.b1)) * c
        }
    }
}
