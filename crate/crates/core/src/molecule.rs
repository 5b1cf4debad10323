//! Rigid and composite diatomic molecules in a double well: the physical
//! realisation of the coupled action.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{derive_rates, ActionParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoleculeParams {
    pub m: f64,
    pub a: f64,
    pub omega: f64,
    #[serde(rename = "Omega")]
    pub big_omega: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub hbar: f64,
}

impl MoleculeParams {
    pub fn new(m: f64, a: f64, omega: f64, big_omega: f64, l: f64) -> Result<Self> {
        let mol = Self { m, a, omega, big_omega, l, hbar: 1.0 };
        mol.validate()?;
        Ok(mol)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("m", self.m), ("a", self.a), ("omega", self.omega), ("Omega", self.big_omega), ("hbar", self.hbar)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameters(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.l.is_finite() && self.l >= 0.0) {
            return Err(Error::InvalidParameters(format!("L must be non-negative, got {}", self.l)));
        }
        Ok(())
    }

    /// Critical bond length 2a/√3 beyond which the double well disappears.
    pub fn critical_length(&self) -> f64 {
        2.0 * self.a / 3f64.sqrt()
    }
}

/// f = √(1 − 3L²/(4a²))
pub fn rigid_f(mol: &MoleculeParams) -> Result<f64> {
    mol.validate()?;
    let arg = 1.0 - 0.75 * (mol.l / mol.a).powi(2);
    if arg <= 0.0 {
        return Err(Error::NoInstanton { l: mol.l, limit: mol.critical_length() });
    }
    Ok(arg.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Same,
    Opposite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidResults {
    pub f: f64,
    #[serde(rename = "S0")]
    pub s0: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub e_plus: f64,
    pub e_minus: f64,
    /// Harmonic return prefactor √(m f ω/(πħ)).
    pub prefactor: f64,
    /// Well frequency fω.
    pub frequency: f64,
}

impl RigidResults {
    pub fn splitting(&self) -> f64 {
        self.e_minus - self.e_plus
    }

    /// Dilute-gas amplitude between wells after time T.
    pub fn amplitude(&self, t: f64, end: Endpoint) -> f64 {
        let base = self.prefactor * (-0.5 * self.frequency * t).exp();
        match end {
            Endpoint::Same => base * (self.k * t).cosh(),
            Endpoint::Opposite => base * (self.k * t).sinh(),
        }
    }
}

pub fn rigid_results(mol: &MoleculeParams) -> Result<RigidResults> {
    let f = rigid_f(mol)?;
    let (m, a, w, hb) = (mol.m, mol.a, mol.omega, mol.hbar);
    let s0 = 2.0 / 3.0 * m * w * a * a * f.powi(3);
    let s = s0 / hb;
    let k = f * w * (6.0 * s / PI).sqrt() * (-s).exp();
    let shift = 2.0 * a * f.powf(2.5) / PI.sqrt() * (hb * m * w.powi(3)).sqrt() * (-s).exp();
    Ok(RigidResults {
        f,
        s0,
        k,
        e_plus: 0.5 * hb * f * w - shift,
        e_minus: 0.5 * hb * f * w + shift,
        prefactor: (m * f * w / (PI * hb)).sqrt(),
        frequency: f * w,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeDerived {
    pub x0: f64,
    pub y0: f64,
    #[serde(rename = "Omega_tilde")]
    pub omega_tilde: f64,
    #[serde(rename = "C_min")]
    pub c_min: f64,
    pub f: f64,
}

/// Minima and effective stiffness of the composite (atom pair) potential.
pub fn composite_derived(mol: &MoleculeParams) -> Result<CompositeDerived> {
    let f = rigid_f(mol)?;
    let (m, a, w, big, l) = (mol.m, mol.a, mol.omega, mol.big_omega, mol.l);
    if l == 0.0 {
        return Err(Error::DegenerateGeometry("L = 0 puts both x minima at the origin".into()));
    }
    let r2 = (w / big).powi(2);
    let la2 = (l / a).powi(2);
    let den = 1.0 - 2.0 * r2 * la2;
    if den <= 0.0 {
        return Err(Error::NoFourWellStructure(format!("1 − 2ω²L²/(Ω²a²) = {den} <= 0")));
    }
    let x02 = l * l * (1.0 - 2.0 * r2) / den;
    let y02 = a * a * (1.0 - 0.75 * la2 - 0.5 * r2 * la2) / den;
    if x02 <= 0.0 || y02 <= 0.0 {
        return Err(Error::NoFourWellStructure(format!("x0² = {x02}, y0² = {y02}")));
    }
    let omega_tilde = big * (1.0 + 0.25 * r2 * la2).sqrt();
    let c_min = 0.125 * m * w * w * l * l * (1.0 - r2 - 0.5 * la2) / den;
    Ok(CompositeDerived { x0: x02.sqrt(), y0: y02.sqrt(), omega_tilde, c_min, f })
}

/// The pair potential in relative (x) and centre-of-mass (y) coordinates.
pub fn composite_potential(mol: &MoleculeParams, x: f64, y: f64) -> f64 {
    let (m, a, w, big, l) = (mol.m, mol.a, mol.omega, mol.big_omega, mol.l);
    let u = |z: f64| m * w * w / (16.0 * a * a) * (z * z - a * a).powi(2);
    u(y + 0.5 * x) + u(y - 0.5 * x) + m * big * big / (32.0 * l * l) * (x * x - l * l).powi(2)
}

/// The same potential regrouped about its minima.
pub fn composite_potential_shifted(mol: &MoleculeParams, d: &CompositeDerived, x: f64, y: f64) -> f64 {
    let (m, a, w, l) = (mol.m, mol.a, mol.omega, mol.l);
    let dx = x * x - d.x0 * d.x0;
    let dy = y * y - d.y0 * d.y0;
    m * d.omega_tilde.powi(2) / (32.0 * l * l) * dx * dx
        + m * w * w / (8.0 * a * a) * dy * dy
        + 3.0 * m * w * w / (16.0 * a * a) * dx * dy
        + d.c_min
}

/// Action constants of the composite molecule, time measured in units of 1/Ω̃.
pub fn to_action_params(mol: &MoleculeParams) -> Result<ActionParams> {
    let d = composite_derived(mol)?;
    let (m, a, w, l, hb) = (mol.m, mol.a, mol.omega, mol.l, mol.hbar);
    let ot = d.omega_tilde;
    let (x0, y0) = (d.x0, d.y0);
    ActionParams::new(
        m * ot * x0 * x0 / (4.0 * hb),
        m * ot * x0.powi(4) / (8.0 * hb * l * l),
        m * y0 * y0 * ot / hb,
        m * w * w * y0.powi(4) / (2.0 * hb * ot * a * a),
        3.0 * m * w * w * x0 * x0 * y0 * y0 / (8.0 * hb * ot * a * a),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoleculeK {
    pub k_p: f64,
    pub k_q: f64,
    pub k_r: f64,
}

impl MoleculeK {
    pub fn ratio_pq(&self) -> f64 {
        self.k_p / self.k_q
    }

    pub fn ratio_rq(&self) -> f64 {
        self.k_r / self.k_q
    }
}

/// Leading-order flavor rates of the composite molecule.
pub fn molecule_k_factors(mol: &MoleculeParams) -> Result<MoleculeK> {
    let f = rigid_f(mol)?;
    let (m, a, w, big, l, hb) = (mol.m, mol.a, mol.omega, mol.big_omega, mol.l, mol.hbar);
    let pre = (12.0 / PI).sqrt();
    let g = 1.0 - 9.0 * l * l / (8.0 * a * a);
    let sp = m * big * a * l / (6.0 * hb);
    let sq = 2.0 * m * w * a * a / (3.0 * hb) * g;
    Ok(MoleculeK {
        k_p: pre * f * f * m * w * a * l / hb * (-sp).exp(),
        k_q: pre * m * w * a * a / hb * (w / (f * big)).sqrt() * g * (-sq).exp(),
        k_r: pre * f * f * m * w * a * l / hb * (-sp - sq).exp(),
    })
}

/// K_P/K_Q in the compact large-Ω form.
pub fn ratio_pq_closed(mol: &MoleculeParams) -> f64 {
    let (m, a, w, big, l, hb) = (mol.m, mol.a, mol.omega, mol.big_omega, mol.l, mol.hbar);
    l / a * (big / w).sqrt() * (-(m * a * l * big / (6.0 * hb)) * (1.0 - 4.0 * a * w / (l * big))).exp()
}

/// K_R/K_Q in the compact large-Ω form.
pub fn ratio_rq_closed(mol: &MoleculeParams) -> f64 {
    let (m, a, w, big, l, hb) = (mol.m, mol.a, mol.omega, mol.big_omega, mol.l, mol.hbar);
    l / a * (big / w).sqrt() * (-(m * a * l * big / (6.0 * hb))).exp()
}

/// Leading-order zero-instanton prefactor R0(T), T in units of 1/Ω̃.
pub fn r0_leading(mol: &MoleculeParams, t: f64) -> Result<f64> {
    let d = composite_derived(mol)?;
    let r = derive_rates(&to_action_params(mol)?)?;
    let expo = -0.5 * (r.kappa + r.epsilon) * t + r.mu2 * r.nu2 / (r.kappa * r.epsilon * (r.kappa + r.epsilon)) * t;
    Ok(mol.m * (d.f * mol.omega * d.omega_tilde).sqrt() / (2.0 * PI * mol.hbar) * expo.exp())
}
