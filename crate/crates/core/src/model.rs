//! The five-constant coupled action, its derived rates, the four-well
//! potential and the zero-instanton harmonic baseline.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Coupling constants of the dimensionless action
///
/// S = ∫ dt [ a1/2 ṗ² + b1/2 q̇² + a2/4 (p²−1)² + b2/4 (q²−1)² + c/2 (p²−1)(q²−1) ].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionParams {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub c: f64,
}

impl ActionParams {
    pub fn new(a1: f64, a2: f64, b1: f64, b2: f64, c: f64) -> Result<Self> {
        let p = Self { a1, a2, b1, b2, c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a1", self.a1), ("a2", self.a2), ("b1", self.b1), ("b2", self.b2)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameters(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !self.c.is_finite() {
            return Err(Error::InvalidParameters(format!("c must be finite, got {}", self.c)));
        }
        Ok(())
    }

    /// Parameters with the roles of p and q exchanged.
    pub fn swapped(&self) -> Self {
        Self { a1: self.b1, a2: self.b2, b1: self.a1, b2: self.a2, c: self.c }
    }

    /// Copy with a different coupling.
    pub fn with_c(&self, c: f64) -> Self {
        Self { c, ..*self }
    }
}

/// Frequencies derived from [`ActionParams`]. `mu2` and `nu2` are signed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub kappa: f64,
    pub epsilon: f64,
    pub mu2: f64,
    pub nu2: f64,
}

impl Rates {
    /// The signed product μν = c/√(a1 b1).
    pub fn mu_nu(&self) -> f64 {
        let m = (self.mu2 * self.nu2).abs().sqrt();
        if self.mu2 < 0.0 {
            -m
        } else {
            m
        }
    }

    /// Inverts [`derive_rates`] given the kinetic weights.
    pub fn to_params(&self, a1: f64, b1: f64) -> Result<ActionParams> {
        ActionParams::new(
            a1,
            0.5 * self.kappa * self.kappa * a1,
            b1,
            0.5 * self.epsilon * self.epsilon * b1,
            self.mu2 * a1,
        )
    }
}

pub fn derive_rates(params: &ActionParams) -> Result<Rates> {
    params.validate()?;
    Ok(Rates {
        kappa: (2.0 * params.a2 / params.a1).sqrt(),
        epsilon: (2.0 * params.b2 / params.b1).sqrt(),
        mu2: params.c / params.a1,
        nu2: params.c / params.b1,
    })
}

/// Instanton flavor: P flips p, Q flips q, R flips both.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flavor {
    P,
    Q,
    R,
}

impl Flavor {
    pub const ALL: [Flavor; 3] = [Flavor::P, Flavor::Q, Flavor::R];

    /// Whether the flavor flips (p, q) between the two time boundaries.
    pub fn flips(self) -> (bool, bool) {
        match self {
            Flavor::P => (true, false),
            Flavor::Q => (false, true),
            Flavor::R => (true, true),
        }
    }

    /// Boundary values (p, q) at t = −T/2 and t = +T/2.
    pub fn boundary(self) -> ((f64, f64), (f64, f64)) {
        match self {
            Flavor::P => ((-1.0, -1.0), (1.0, -1.0)),
            Flavor::Q => ((-1.0, -1.0), (-1.0, 1.0)),
            Flavor::R => ((-1.0, -1.0), (1.0, 1.0)),
        }
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Flavor::P => "P",
            Flavor::Q => "Q",
            Flavor::R => "R",
        };
        f.write_str(s)
    }
}

impl FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "P" | "p" => Ok(Flavor::P),
            "Q" | "q" => Ok(Flavor::Q),
            "R" | "r" => Ok(Flavor::R),
            other => Err(Error::InvalidParameters(format!("unknown flavor {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grade {
    Invalid,
    Marginal,
    Strong,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchyReport {
    pub kappa_over_epsilon: f64,
    pub kappa2_over_mu2: f64,
    pub kappa2_over_nu2: f64,
    pub grade: Grade,
}

/// Grades the separation of scales that the perturbative profiles rely on.
pub fn hierarchy_check(rates: &Rates) -> HierarchyReport {
    let k2 = rates.kappa * rates.kappa;
    let ratio = |den: f64| if den == 0.0 { f64::INFINITY } else { k2 / den.abs() };
    let r = [rates.kappa / rates.epsilon, ratio(rates.mu2), ratio(rates.nu2)];
    let min = r.iter().cloned().fold(f64::INFINITY, f64::min);
    let grade = if min >= 10.0 {
        Grade::Strong
    } else if min >= 2.5 {
        Grade::Marginal
    } else {
        Grade::Invalid
    };
    HierarchyReport { kappa_over_epsilon: r[0], kappa2_over_mu2: r[1], kappa2_over_nu2: r[2], grade }
}

pub fn potential(params: &ActionParams, p: f64, q: f64) -> f64 {
    let u = p * p - 1.0;
    let v = q * q - 1.0;
    0.25 * params.a2 * u * u + 0.25 * params.b2 * v * v + 0.5 * params.c * u * v
}

/// (∂V/∂p, ∂V/∂q)
pub fn potential_gradient(params: &ActionParams, p: f64, q: f64) -> (f64, f64) {
    let u = p * p - 1.0;
    let v = q * q - 1.0;
    (params.a2 * p * u + params.c * p * v, params.b2 * q * v + params.c * q * u)
}

/// (V_pp, V_pq, V_qq)
pub fn potential_hessian(params: &ActionParams, p: f64, q: f64) -> (f64, f64, f64) {
    (
        params.a2 * (3.0 * p * p - 1.0) + params.c * (q * q - 1.0),
        2.0 * params.c * p * q,
        params.b2 * (3.0 * q * q - 1.0) + params.c * (p * p - 1.0),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineMode {
    Perturbative,
    Exact,
}

/// Ground energy of the quadratic fluctuations about a vacuum.
pub fn harmonic_baseline(params: &ActionParams, mode: BaselineMode) -> Result<f64> {
    let r = derive_rates(params)?;
    match mode {
        BaselineMode::Perturbative => Ok(0.5 * (r.kappa + r.epsilon)
            - r.mu2 * r.nu2 / (r.kappa * r.epsilon * (r.kappa + r.epsilon))),
        BaselineMode::Exact => {
            let (k2, e2, off) = (r.kappa * r.kappa, r.epsilon * r.epsilon, 2.0 * r.mu_nu());
            let mean = 0.5 * (k2 + e2);
            let half = (0.25 * (k2 - e2) * (k2 - e2) + off * off).sqrt();
            let lo = mean - half;
            if lo <= 0.0 {
                return Err(Error::UnstableQuadraticForm { eigenvalue: lo });
            }
            Ok(0.5 * ((mean + half).sqrt() + lo.sqrt()))
        }
    }
}
