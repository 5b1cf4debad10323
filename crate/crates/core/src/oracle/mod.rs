//! Brute-force finite-difference Schrödinger eigensolvers used as ground
//! truth for the semiclassical pipeline.

mod lanczos;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluct::FlavorResult;
use crate::gas::{energy_levels, Parity, Sector};
use crate::model::{derive_rates, hierarchy_check, potential, ActionParams, Grade, HierarchyReport};
use lanczos::{shift_invert_lowest, BandCholesky, Tridiagonal};

/// Absolute tolerance (scaled by max(1,|E|)) on the change of the
/// extrapolated levels between successive refinements.
pub const REFINEMENT_TOL: f64 = 1e-6;
const MAX_POINTS_1D: usize = (1 << 16) + 1;
const MAX_LEVELS_1D: usize = 8;
const LANCZOS_SEED: u64 = 0x0_5eed;

/// Symmetric grid on [−W, W]; the point count includes both Dirichlet ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub points_per_axis: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { half_width: 2.5, points_per_axis: 257 }
    }
}

impl GridSpec {
    pub fn new(half_width: f64, points_per_axis: usize) -> Result<Self> {
        let g = Self { half_width, points_per_axis };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width >= 2.5) {
            return Err(Error::InvalidParameters(format!("half_width must be >= 2.5, got {}", self.half_width)));
        }
        if self.points_per_axis < 129 || self.points_per_axis % 2 == 0 {
            return Err(Error::InvalidParameters(format!(
                "points_per_axis must be odd and >= 129, got {}",
                self.points_per_axis
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points_per_axis - 1) as f64
    }

    /// Index of the last interior node on the positive side.
    fn half(&self) -> usize {
        (self.points_per_axis - 1) / 2 - 1
    }

    fn coarser(&self) -> Self {
        Self { half_width: self.half_width, points_per_axis: (self.points_per_axis + 1) / 2 }
    }

    fn finer(&self) -> Self {
        Self { half_width: self.half_width, points_per_axis: 2 * self.points_per_axis - 1 }
    }

    /// Interior node coordinates, centred on 0.
    pub fn nodes(&self) -> Vec<f64> {
        let m = self.half() as i64;
        let h = self.spacing();
        (-m..=m).map(|j| j as f64 * h).collect()
    }
}

fn richardson(coarse: &[f64], fine: &[f64]) -> Vec<f64> {
    coarse.iter().zip(fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect()
}

fn max_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / x.abs().max(1.0)).fold(0.0, f64::max)
}

/// Hamiltonian −(1/(2m)) d² + V on the full interior grid.
fn tridiagonal_1d(mass: f64, v: impl Fn(f64) -> f64, grid: &GridSpec) -> Tridiagonal {
    let h = grid.spacing();
    let t = 0.5 / (mass * h * h);
    let x = grid.nodes();
    Tridiagonal { d: x.iter().map(|&x| 2.0 * t + v(x)).collect(), e: vec![-t; x.len() - 1] }
}

/// Raw (unextrapolated) lowest levels on one grid.
pub fn levels_1d_fixed(b1: f64, b2: f64, grid: &GridSpec, n_levels: usize) -> Vec<f64> {
    let tri = tridiagonal_1d(b1, |q| 0.25 * b2 * (q * q - 1.0).powi(2), grid);
    tri.lowest(n_levels)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleLevels {
    /// Richardson-extrapolated levels, ascending.
    pub levels: Vec<f64>,
    /// Raw levels on the requested grid.
    pub raw: Vec<f64>,
    /// Parity labels, present for two-dimensional solves.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parities: Option<Vec<Parity>>,
    /// Largest relative change of the extrapolated levels in the last refinement.
    pub change: f64,
    /// Finest grid used.
    pub points: usize,
}

fn check_params_1d(b1: f64, b2: f64, n_levels: usize) -> Result<()> {
    if !(b1.is_finite() && b1 > 0.0 && b2.is_finite() && b2 >= 0.0) {
        return Err(Error::InvalidParameters(format!("need b1 > 0, b2 >= 0, got {b1}, {b2}")));
    }
    if n_levels == 0 || n_levels > MAX_LEVELS_1D {
        return Err(Error::InvalidParameters(format!("n_levels must be in 1..={MAX_LEVELS_1D}")));
    }
    Ok(())
}

/// Lowest levels of −(1/(2b1)) d²/dq² + (b2/4)(q²−1)², extrapolated over a
/// grid-doubling ladder that starts one level below `grid`.
pub fn solve_1d(b1: f64, b2: f64, grid: &GridSpec, n_levels: usize) -> Result<OracleLevels> {
    check_params_1d(b1, b2, n_levels)?;
    grid.validate()?;
    let raw = levels_1d_fixed(b1, b2, grid, n_levels);
    let mut g = *grid;
    let mut prev = levels_1d_fixed(b1, b2, &grid.coarser(), n_levels);
    let mut cur = raw.clone();
    let mut rich_prev = richardson(&prev, &cur);
    loop {
        g = g.finer();
        if g.points_per_axis > MAX_POINTS_1D {
            return Err(Error::ResolutionInsufficient {
                points: g.points_per_axis,
                change: f64::NAN,
                tolerance: REFINEMENT_TOL,
            });
        }
        prev = cur;
        cur = levels_1d_fixed(b1, b2, &g, n_levels);
        let rich = richardson(&prev, &cur);
        let change = max_change(&rich, &rich_prev);
        if change <= REFINEMENT_TOL {
            return Ok(OracleLevels { levels: rich, raw, parities: None, change, points: g.points_per_axis });
        }
        rich_prev = rich;
    }
}

/// One parity sector of the 2-D problem on the quadrant p, q ≥ 0.
/// Even directions keep the axis node and are symmetrised with a √2 coupling.
struct SectorOperator {
    np: usize,
    nq: usize,
    diag: Vec<f64>,
    tp: f64,
    tq: f64,
    even_p: bool,
    even_q: bool,
}

impl SectorOperator {
    fn new(params: &ActionParams, grid: &GridSpec, parity: Parity) -> Self {
        let h = grid.spacing();
        let half = grid.half();
        let (even_p, even_q) = (parity.p > 0, parity.q > 0);
        let start = |even: bool| if even { 0 } else { 1 };
        let (sp, sq) = (start(even_p), start(even_q));
        let np = half + 1 - sp;
        let nq = half + 1 - sq;
        let tp = 0.5 / (params.a1 * h * h);
        let tq = 0.5 / (params.b1 * h * h);
        let mut diag = Vec::with_capacity(np * nq);
        for i in 0..np {
            let p = (i + sp) as f64 * h;
            for j in 0..nq {
                let q = (j + sq) as f64 * h;
                diag.push(2.0 * tp + 2.0 * tq + potential(params, p, q));
            }
        }
        Self { np, nq, diag, tp, tq, even_p, even_q }
    }

    /// A[r][r−k] of H − σ.
    fn entry(&self, r: usize, k: usize, sigma: f64) -> f64 {
        let nq = self.nq;
        if k == 0 {
            self.diag[r] - sigma
        } else if k == 1 && r % nq != 0 {
            let j = r % nq;
            if self.even_q && j == 1 {
                -std::f64::consts::SQRT_2 * self.tq
            } else {
                -self.tq
            }
        } else if k == nq {
            let i = r / nq;
            if self.even_p && i == 1 {
                -std::f64::consts::SQRT_2 * self.tp
            } else {
                -self.tp
            }
        } else {
            0.0
        }
    }

    fn lowest(&self, k: usize) -> Result<Vec<f64>> {
        let vmin = self.diag.iter().cloned().fold(f64::INFINITY, f64::min) - 2.0 * (self.tp + self.tq);
        let sigma = vmin - 1e-3 * vmin.abs().max(1.0);
        let chol = BandCholesky::factor(self.np * self.nq, self.nq, |r, kk| self.entry(r, kk, sigma))?;
        shift_invert_lowest(&chol, sigma, k, LANCZOS_SEED)
    }
}

fn check_four_well(params: &ActionParams) -> Result<()> {
    params.validate()?;
    if params.c * params.c >= params.a2 * params.b2 {
        return Err(Error::NoFourWellStructure(format!(
            "c² = {} >= a2·b2 = {}",
            params.c * params.c,
            params.a2 * params.b2
        )));
    }
    Ok(())
}

/// Raw lowest levels per parity sector (ordered S, P, Q, R) on one grid.
pub fn sector_levels_fixed(params: &ActionParams, grid: &GridSpec, per_sector: usize) -> Result<Vec<Vec<f64>>> {
    check_four_well(params)?;
    Sector::ALL
        .par_iter()
        .map(|s| SectorOperator::new(params, grid, s.parity()).lowest(per_sector))
        .collect()
}

fn merge(sectors: &[Vec<f64>], n: usize) -> (Vec<f64>, Vec<Parity>) {
    let mut all: Vec<(f64, Parity)> = sectors
        .iter()
        .zip(Sector::ALL)
        .flat_map(|(v, s)| v.iter().map(move |&e| (e, s.parity())))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    all.truncate(n);
    all.into_iter().unzip()
}

/// Lowest `n_levels` states of the four-well Hamiltonian with their parity
/// labels, extrapolated over the ladder {(n+1)/2, n, 2n−1}.
pub fn solve_2d(params: &ActionParams, grid: &GridSpec, n_levels: usize) -> Result<OracleLevels> {
    grid.validate()?;
    if n_levels == 0 {
        return Err(Error::InvalidParameters("n_levels must be positive".into()));
    }
    let ladder = [grid.coarser(), *grid, grid.finer()];
    let mut runs = Vec::with_capacity(3);
    for g in &ladder {
        runs.push(sector_levels_fixed(params, g, n_levels)?);
    }
    let rich = |a: &Vec<Vec<f64>>, b: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        a.iter().zip(b).map(|(x, y)| richardson(x, y)).collect()
    };
    let r1 = rich(&runs[0], &runs[1]);
    let r2 = rich(&runs[1], &runs[2]);
    let (levels, parities) = merge(&r2, n_levels);
    let (prev, _) = merge(&r1, n_levels);
    let change = max_change(&levels, &prev);
    let (raw, _) = merge(&runs[1], n_levels);
    if change > REFINEMENT_TOL {
        return Err(Error::ResolutionInsufficient {
            points: ladder[2].points_per_axis,
            change,
            tolerance: REFINEMENT_TOL,
        });
    }
    Ok(OracleLevels { levels, raw, parities: Some(parities), change, points: ladder[2].points_per_axis })
}

/// H ψ on the full interior grid, ψ stored p-major.
pub fn apply_hamiltonian(params: &ActionParams, grid: &GridSpec, psi: &[f64]) -> Vec<f64> {
    let x = grid.nodes();
    let n = x.len();
    assert_eq!(psi.len(), n * n);
    let h = grid.spacing();
    let tp = 0.5 / (params.a1 * h * h);
    let tq = 0.5 / (params.b1 * h * h);
    let at = |i: isize, j: isize| {
        if i < 0 || j < 0 || i >= n as isize || j >= n as isize {
            0.0
        } else {
            psi[i as usize * n + j as usize]
        }
    };
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let (ii, jj) = (i as isize, j as isize);
            let kin_p = tp * (2.0 * psi[i * n + j] - (at(ii - 1, jj) + at(ii + 1, jj)));
            let kin_q = tq * (2.0 * psi[i * n + j] - (at(ii, jj - 1) + at(ii, jj + 1)));
            out[i * n + j] = kin_p + kin_q + potential(params, x[i], x[j]) * psi[i * n + j];
        }
    }
    out
}

/// ψ(p, q) → ψ(−p, q) or ψ(p, −q) on the full interior grid.
pub fn reflect(psi: &[f64], n: usize, flip_p: bool, flip_q: bool) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let si = if flip_p { n - 1 - i } else { i };
            let sj = if flip_q { n - 1 - j } else { j };
            out[i * n + j] = psi[si * n + sj];
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Agree,
    Disagree,
    SemiclassicsUnreliable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    /// Lowest four oracle levels, ascending.
    pub levels: Vec<f64>,
    pub parities: Vec<Parity>,
    /// Instanton levels in the same sector order as `levels`.
    pub instanton_levels: Vec<f64>,
    /// |Δ_inst − Δ_oracle|/|Δ_oracle| per level, Δ measured from the four-level mean.
    pub rel_errors: Vec<f64>,
    pub oracle_deltas: Vec<f64>,
    pub instanton_deltas: Vec<f64>,
    pub baseline_error: f64,
    pub sign_agreement: bool,
    pub ordering_agreement: bool,
    pub min_action: f64,
    pub hierarchy: HierarchyReport,
    pub tolerance: f64,
    pub verdict: Verdict,
}

/// Smallest single-flip action below which the semiclassical prediction is
/// reported as unreliable instead of wrong.
pub const MIN_RELIABLE_ACTION: f64 = 2.0;

pub fn compare(params: &ActionParams, results: &[FlavorResult], grid: &GridSpec, tolerance: f64) -> Result<CompareReport> {
    let oracle = solve_2d(params, grid, 4)?;
    let parities = oracle.parities.clone().unwrap_or_default();
    let inst = energy_levels(params, results)?;
    let mut distinct = parities.clone();
    distinct.sort_by_key(|p| (p.p, p.q));
    distinct.dedup();
    if distinct.len() != 4 {
        return Err(Error::NoFourWellStructure(format!("lowest four oracle states span parities {parities:?}")));
    }
    let mean = oracle.levels.iter().sum::<f64>() / 4.0;
    let oracle_deltas: Vec<f64> = oracle.levels.iter().map(|e| e - mean).collect();
    let matched: Vec<_> = parities
        .iter()
        .map(|p| *inst.levels.iter().find(|l| l.parity == *p).expect("all sectors present"))
        .collect();
    let instanton_levels: Vec<f64> = matched.iter().map(|l| l.energy).collect();
    let instanton_deltas: Vec<f64> = matched.iter().map(|l| l.delta).collect();
    let rel_errors: Vec<f64> = instanton_deltas
        .iter()
        .zip(&oracle_deltas)
        .map(|(i, o)| (i - o).abs() / o.abs())
        .collect();
    let sign_agreement = instanton_deltas.iter().zip(&oracle_deltas).all(|(i, o)| i.signum() == o.signum());
    let ordering_agreement = instanton_levels.windows(2).all(|w| w[0] <= w[1]);
    let hierarchy = hierarchy_check(&derive_rates(params)?);
    let min_action = results.iter().filter(|r| r.flavor != crate::model::Flavor::R).map(|r| r.s0).fold(f64::INFINITY, f64::min);
    let verdict = if min_action < MIN_RELIABLE_ACTION || hierarchy.grade == Grade::Invalid {
        Verdict::SemiclassicsUnreliable
    } else if sign_agreement && ordering_agreement && rel_errors.iter().all(|e| *e <= tolerance) {
        Verdict::Agree
    } else {
        Verdict::Disagree
    };
    Ok(CompareReport {
        baseline_error: (inst.baseline - mean).abs() / mean.abs(),
        levels: oracle.levels,
        parities,
        instanton_levels,
        rel_errors,
        oracle_deltas,
        instanton_deltas,
        sign_agreement,
        ordering_agreement,
        min_action,
        hierarchy,
        tolerance,
        verdict,
    })
}
