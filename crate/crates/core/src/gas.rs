//! Three-flavor dilute instanton gas on the four vacua.
//!
//! Vertices: a = (−1,−1), b = (+1,−1), c = (−1,+1), d = (+1,+1).
//! P edges flip p, Q edges flip q, R edges flip both.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluct::FlavorResult;
use crate::model::{harmonic_baseline, ActionParams, BaselineMode, Flavor};

pub fn adjacency(kp: f64, kq: f64, kr: f64) -> Result<Matrix4<f64>> {
    for (name, k) in [("K_P", kp), ("K_Q", kq), ("K_R", kr)] {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::InvalidRates(format!("{name} = {k} must be finite and non-negative")));
        }
    }
    #[rustfmt::skip]
    let m = Matrix4::new(
        0.0, kp, kq, kr,
        kp, 0.0, kr, kq,
        kq, kr, 0.0, kp,
        kr, kq, kp, 0.0,
    );
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplittingSet {
    pub lambda_p: f64,
    pub lambda_q: f64,
    pub lambda_r: f64,
    pub lambda_s: f64,
    pub delta_p: f64,
    pub delta_q: f64,
    pub delta_r: f64,
    pub delta_s: f64,
}

impl SplittingSet {
    pub fn from_k(kp: f64, kq: f64, kr: f64) -> Self {
        let lambda_p = -kp + kq - kr;
        let lambda_q = kp - kq - kr;
        let lambda_r = -kp - kq + kr;
        let lambda_s = kp + kq + kr;
        Self {
            lambda_p,
            lambda_q,
            lambda_r,
            lambda_s,
            delta_p: -lambda_p,
            delta_q: -lambda_q,
            delta_r: -lambda_r,
            delta_s: -lambda_s,
        }
    }

    /// (λ_P, λ_Q, λ_R, λ_S)
    pub fn lambdas(&self) -> [f64; 4] {
        [self.lambda_p, self.lambda_q, self.lambda_r, self.lambda_s]
    }

    pub fn deltas(&self) -> [f64; 4] {
        [self.delta_p, self.delta_q, self.delta_r, self.delta_s]
    }
}

#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub splittings: SplittingSet,
    /// Columns are the eigenvectors for (λ_S, λ_P, λ_Q, λ_R).
    pub c: Matrix4<f64>,
    pub c_inv: Matrix4<f64>,
    /// max |C⁻¹ 𝕂 C − Λ|
    pub defect: f64,
}

pub fn eigendecompose(kp: f64, kq: f64, kr: f64) -> Result<Eigensystem> {
    let k = adjacency(kp, kq, kr)?;
    let s = SplittingSet::from_k(kp, kq, kr);
    #[rustfmt::skip]
    let c = Matrix4::new(
        1.0, -1.0, -1.0,  1.0,
        1.0,  1.0, -1.0, -1.0,
        1.0, -1.0,  1.0, -1.0,
        1.0,  1.0,  1.0,  1.0,
    );
    let c_inv = c.transpose() * 0.25;
    let lam = Matrix4::from_diagonal(&nalgebra::Vector4::new(s.lambda_s, s.lambda_p, s.lambda_q, s.lambda_r));
    let defect = (c_inv * k * c - lam).abs().max();
    Ok(Eigensystem { splittings: s, c, c_inv, defect })
}

/// Signs of (e^{λ_P T}, e^{λ_Q T}, e^{λ_R T}, e^{λ_S T}) in A_aa, A_ab, A_ac, A_ad.
pub const SIGNS: [[f64; 4]; 4] = [
    [1.0, 1.0, 1.0, 1.0],
    [-1.0, 1.0, -1.0, 1.0],
    [1.0, -1.0, -1.0, 1.0],
    [-1.0, -1.0, 1.0, 1.0],
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeSet {
    #[serde(rename = "T")]
    pub t: f64,
    pub a_aa: f64,
    pub a_ab: f64,
    pub a_ac: f64,
    pub a_ad: f64,
    /// The amplitudes equal exp(log_scale) · mantissa.
    pub log_scale: f64,
    pub mantissa: [f64; 4],
}

impl AmplitudeSet {
    pub fn values(&self) -> [f64; 4] {
        [self.a_aa, self.a_ab, self.a_ac, self.a_ad]
    }
}

/// Vertex-to-vertex amplitudes out of vertex a. `log_r0` gives ln R0(T).
pub fn amplitudes<F: Fn(f64) -> f64>(log_r0: F, s: &SplittingSet, t: f64) -> Result<AmplitudeSet> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameters(format!("T must be non-negative, got {t}")));
    }
    let x = s.lambdas().map(|l| l * t);
    let top = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut mantissa = [0.0; 4];
    let shift = if top.abs() <= 1.0 {
        // the signs in each off-diagonal row sum to zero, so expm1 keeps
        // the small-T cancellation exact
        for (row, m) in SIGNS.iter().zip(mantissa.iter_mut()) {
            let ones: f64 = row.iter().sum();
            *m = ones + row.iter().zip(&x).map(|(s, v)| s * v.exp_m1()).sum::<f64>();
        }
        0.0
    } else {
        for (row, m) in SIGNS.iter().zip(mantissa.iter_mut()) {
            *m = row.iter().zip(&x).map(|(s, v)| s * (v - top).exp()).sum();
        }
        top
    };
    let log_scale = log_r0(t) + shift - 4f64.ln();
    if log_scale > 709.0 {
        return Err(Error::Overflow(format!("amplitude scale exp({log_scale}) at T = {t}")));
    }
    let scale = log_scale.exp();
    Ok(AmplitudeSet {
        t,
        a_aa: scale * mantissa[0],
        a_ab: scale * mantissa[1],
        a_ac: scale * mantissa[2],
        a_ad: scale * mantissa[3],
        log_scale,
        mantissa,
    })
}

/// Parity eigenvalues (Π_p, Π_q) of the level tied to each eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Parity {
    pub p: i8,
    pub q: i8,
}

impl Parity {
    pub const fn new(p: i8, q: i8) -> Self {
        Self { p, q }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sector {
    S,
    P,
    Q,
    R,
}

impl Sector {
    pub const ALL: [Sector; 4] = [Sector::S, Sector::P, Sector::Q, Sector::R];

    pub fn parity(self) -> Parity {
        match self {
            Sector::S => Parity::new(1, 1),
            Sector::P => Parity::new(-1, 1),
            Sector::Q => Parity::new(1, -1),
            Sector::R => Parity::new(-1, -1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub sector: Sector,
    pub parity: Parity,
    pub delta: f64,
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Levels {
    pub baseline: f64,
    pub splittings: SplittingSet,
    /// Ordered S, P, Q, R.
    pub levels: [Level; 4],
}

impl Levels {
    pub fn sorted(&self) -> Vec<Level> {
        let mut v = self.levels.to_vec();
        v.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap());
        v
    }
}

pub fn energy_levels_from_k(params: &ActionParams, kp: f64, kq: f64, kr: f64) -> Result<Levels> {
    adjacency(kp, kq, kr)?;
    let baseline = harmonic_baseline(params, BaselineMode::Perturbative)?;
    let s = SplittingSet::from_k(kp, kq, kr);
    let deltas = [s.delta_s, s.delta_p, s.delta_q, s.delta_r];
    let levels = std::array::from_fn(|i| {
        let sector = Sector::ALL[i];
        Level { sector, parity: sector.parity(), delta: deltas[i], energy: baseline + deltas[i] }
    });
    Ok(Levels { baseline, splittings: s, levels })
}

pub fn energy_levels(params: &ActionParams, results: &[FlavorResult]) -> Result<Levels> {
    let k = |f: Flavor| {
        results
            .iter()
            .find(|r| r.flavor == f)
            .map(|r| r.k)
            .ok_or_else(|| Error::InvalidParameters(format!("missing flavor {f}")))
    };
    energy_levels_from_k(params, k(Flavor::P)?, k(Flavor::Q)?, k(Flavor::R)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjacency_pattern() {
        let m = adjacency(1.0, 0.0, 0.0).unwrap();
        assert_eq!(m[(0, 1)], 1.0);
        assert_eq!(m[(2, 3)], 1.0);
        assert_eq!(m.sum(), 4.0);
        let m = adjacency(0.3, 0.5, 0.7).unwrap();
        assert_eq!(m.trace(), 0.0);
        let col = m * nalgebra::Vector4::new(1.0, 0.0, 0.0, 0.0);
        assert_eq!(col.as_slice(), &[0.0, 0.3, 0.5, 0.7]);
        assert!(adjacency(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn symmetric_rates() {
        let e = eigendecompose(0.2, 0.2, 0.2).unwrap();
        assert!((e.splittings.lambda_s - 0.6).abs() < 1e-15);
        assert!((e.splittings.lambda_p + 0.2).abs() < 1e-15);
        assert!(e.defect < 1e-15);
    }

    #[test]
    fn t_zero() {
        let s = SplittingSet::from_k(0.3, 0.1, 0.05);
        let a = amplitudes(|_| 0.0, &s, 0.0).unwrap();
        assert_eq!(a.values(), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn huge_exponent_stays_finite() {
        let s = SplittingSet::from_k(1.0, 1.0, 1.0);
        let a = amplitudes(|t| -1.6 * t, &s, 500.0).unwrap();
        assert!(a.a_aa.is_finite() && a.a_aa > 0.0);
        assert!(amplitudes(|_| 0.0, &s, 500.0).is_err());
    }
}
