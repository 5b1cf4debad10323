use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use coupled_instantons::classical::{
    action_analytic, action_two_ways, analytic_profile, energy_drift, profile_norms, solve_bvp, zero_mode_residual,
    InstantonProfile, TimeGrid,
};
use coupled_instantons::fluct::{fc_closed, fc_numeric, k_factor, log_r0, r0_rate, FcSource, FlavorResult};
use coupled_instantons::gas::{amplitudes, energy_levels, AmplitudeSet};
use coupled_instantons::greens::{calibrate_c0, green, orthogonality_defect, PropagatorSpec};
use coupled_instantons::molecule::{
    composite_derived, molecule_k_factors, ratio_pq_closed, ratio_rq_closed, rigid_results,
};
use coupled_instantons::oracle::{compare, solve_2d};
use coupled_instantons::{derive_rates, hierarchy_check, ActionParams, Flavor};

use crate::config::{Format, InputMode, RunConfig};
use crate::error::CliError;

/// What a command hands back to `main` for printing.
pub enum Output {
    Json(Value),
    Text(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Bvp,
    Analytic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    Pipeline,
    Molecule,
    Fc,
}

/// A linear or geometric axis over one config key.
#[derive(Clone, Debug)]
pub struct Axis {
    pub key: String,
    pub from: f64,
    pub to: f64,
    pub points: usize,
    pub geometric: bool,
}

/// Virtual axis: κ/ε at fixed κ, couplings held in proportion to ε².
pub const HIERARCHY_AXIS: &str = "kappa_over_epsilon";

impl Axis {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if self.points == 0 {
            return Err(CliError::Config(format!("axis '{}' is empty", self.key)));
        }
        if !(self.from.is_finite() && self.to.is_finite()) {
            return Err(CliError::Config("axis bounds must be finite".into()));
        }
        if self.geometric && !(self.from > 0.0 && self.to > 0.0) {
            return Err(CliError::Config("geometric axis needs positive bounds".into()));
        }
        if self.points == 1 {
            return Ok(vec![self.from]);
        }
        let n = (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| {
                let s = i as f64 / n;
                if self.geometric {
                    self.from * (self.to / self.from).powf(s)
                } else {
                    self.from + (self.to - self.from) * s
                }
            })
            .collect())
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_profile(path: &Path, profile: &InstantonProfile) -> Result<(), CliError> {
    let f = fs::File::create(path)?;
    profile.write_csv(std::io::BufWriter::new(f))?;
    Ok(())
}

fn amplitude_csv(rows: &[AmplitudeSet]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["T", "A_aa", "A_ab", "A_ac", "A_ad"]).map_err(csv_err)?;
    for a in rows {
        w.write_record([a.t, a.a_aa, a.a_ab, a.a_ac, a.a_ad].map(full)).map_err(csv_err)?;
    }
    finish(w)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// 17 significant digits.
fn full(v: f64) -> String {
    format!("{v:.16e}")
}

fn molecule_json(cfg: &RunConfig) -> Result<Option<Value>, CliError> {
    let Some(mol) = cfg.molecule_params()? else {
        return Ok(None);
    };
    let derived = composite_derived(&mol)?;
    Ok(Some(json!({
        "params": mol,
        "derived": derived,
        "rigid": rigid_results(&mol)?,
    })))
}

pub fn params(cfg: &RunConfig) -> Result<Output, CliError> {
    let molecule = molecule_json(cfg)?;
    let p = cfg.action_params()?;
    let r = derive_rates(&p)?;
    let mut out = json!({
        "action_params": p,
        "rates": r,
        "mu_nu": r.mu_nu(),
        "hierarchy": hierarchy_check(&r),
    });
    if let Some(m) = molecule {
        out["molecule"] = m;
    }
    Ok(Output::Json(out))
}

fn grid_for(cfg: &RunConfig, p: &ActionParams) -> Result<TimeGrid, CliError> {
    Ok(match cfg.time_grid(p)? {
        Some(g) => g,
        None => TimeGrid::for_rates(&derive_rates(p)?),
    })
}

pub fn classical(cfg: &RunConfig, flavor: Flavor, method: Method) -> Result<Output, CliError> {
    let p = cfg.action_params()?;
    let r = derive_rates(&p)?;
    let grid = grid_for(cfg, &p)?;
    let (profile, result) = match method {
        Method::Bvp => {
            let (prof, res) = solve_bvp(flavor, &p, &grid, &cfg.solver())?;
            (prof, serde_json::to_value(res)?)
        }
        Method::Analytic => {
            let prof = analytic_profile(flavor, &r, &grid)?;
            let (lag, norms) = action_two_ways(&prof, &p);
            let (np, nq) = profile_norms(&prof);
            let diag = json!({
                "S0": action_analytic(flavor, &p),
                "norm_p": np,
                "norm_q": nq,
                "euclidean_energy_drift": energy_drift(&prof, &p),
                "s_lagrangian": lag,
                "s_norms": norms,
                "zero_mode_residual": zero_mode_residual(&prof, &p),
                "warnings": Vec::<String>::new(),
            });
            (prof, diag)
        }
    };
    if cfg.format == Format::Csv {
        let mut buf = Vec::new();
        profile.write_csv(&mut buf)?;
        return Ok(Output::Text(String::from_utf8(buf).expect("utf-8")));
    }
    ensure_dir(&cfg.out_dir)?;
    let name = format!("classical_{flavor}_{}.csv", if method == Method::Bvp { "bvp" } else { "analytic" });
    let path = cfg.out_dir.join(name);
    write_profile(&path, &profile)?;
    Ok(Output::Json(json!({
        "flavor": flavor,
        "method": if method == Method::Bvp { "bvp" } else { "analytic" },
        "grid": grid,
        "S0_closed": action_analytic(flavor, &p),
        "result": result,
        "profile_csv": path,
    })))
}

pub fn propagator(cfg: &RunConfig, kappa: f64, tp: f64, ts: &[f64], calibrate: bool) -> Result<Output, CliError> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(CliError::Config(format!("kappa must be positive, got {kappa}")));
    }
    let spec = PropagatorSpec::new(kappa);
    let values: Vec<(f64, f64)> = ts.iter().map(|&t| (t, green(&spec, t, tp))).collect();
    if cfg.format == Format::Csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["t", "G"]).map_err(csv_err)?;
        for (t, g) in &values {
            w.write_record([full(*t), full(*g)]).map_err(csv_err)?;
        }
        return Ok(Output::Text(finish(w)?));
    }
    let mut out = json!({
        "kappa": kappa,
        "c0": spec.c0,
        "tp": tp,
        "values": values.iter().map(|(t, g)| json!({"t": t, "G": g})).collect::<Vec<_>>(),
    });
    if calibrate {
        let quad = cfg.fc_config().quad;
        out["calibrated_c0"] = json!(calibrate_c0(kappa, &quad)?);
        out["orthogonality_defect"] = json!(orthogonality_defect(&spec, tp, &quad)?);
    }
    Ok(Output::Json(out))
}

fn flavor_results(cfg: &RunConfig, p: &ActionParams) -> Result<Vec<FlavorResult>, CliError> {
    let kc = cfg.k_config(p)?;
    Flavor::ALL.iter().map(|&f| k_factor(f, p, &kc).map_err(CliError::from)).collect()
}

pub fn fluct(cfg: &RunConfig) -> Result<Output, CliError> {
    let p = cfg.action_params()?;
    let r = derive_rates(&p)?;
    let results = flavor_results(cfg, &p)?;
    let mut flavors = Vec::new();
    for res in &results {
        let mut entry = serde_json::to_value(res)?;
        entry["Fc_closed"] = json!(fc_closed(res.flavor, &r));
        if cfg.fc == FcSource::Numeric {
            entry["Fc_terms"] = serde_json::to_value(fc_numeric(res.flavor, &r, &cfg.fc_config())?)?;
        }
        flavors.push(entry);
    }
    Ok(Output::Json(json!({
        "action_params": p,
        "rates": r,
        "R0": {
            "log_prefactor": log_r0(&p, 0.0, cfg.x0, cfg.y0)?,
            "rate": r0_rate(&r),
        },
        "flavors": flavors,
    })))
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

pub fn splittings(cfg: &RunConfig, with_oracle: bool) -> Result<Output, CliError> {
    let mut timing = Map::new();
    let p = cfg.action_params()?;
    let r = derive_rates(&p)?;

    let start = Instant::now();
    let results = flavor_results(cfg, &p)?;
    timing.insert("flavors".into(), json!(elapsed_ms(start)));

    let start = Instant::now();
    let levels = energy_levels(&p, &results)?;
    let s = levels.splittings;
    let log_r0 = |t: f64| log_r0(&p, t, cfg.x0, cfg.y0).expect("validated params");
    let times: Vec<f64> = if cfg.t_points == 1 {
        vec![0.0]
    } else {
        (0..cfg.t_points).map(|i| cfg.t_max * i as f64 / (cfg.t_points - 1) as f64).collect()
    };
    let amps = times.iter().map(|&t| amplitudes(log_r0, &s, t)).collect::<Result<Vec<_>, _>>()?;
    timing.insert("gas".into(), json!(elapsed_ms(start)));

    if cfg.format == Format::Csv {
        return Ok(Output::Text(amplitude_csv(&amps)?));
    }

    let d = s.deltas();
    let sum_delta: f64 = d.iter().sum();
    let spread: f64 = d.iter().map(|v| v.abs()).sum();
    let tensor_defect = if spread > 0.0 { (s.delta_s + s.delta_r - s.delta_p - s.delta_q).abs() / spread } else { 0.0 };
    let mut out = json!({
        "action_params": p,
        "rates": r,
        "hierarchy": hierarchy_check(&r),
        "flavors": results,
        "K": {"P": results[0].k, "Q": results[1].k, "R": results[2].k},
        "lambdas": {"P": s.lambda_p, "Q": s.lambda_q, "R": s.lambda_r, "S": s.lambda_s},
        "deltas": {"P": s.delta_p, "Q": s.delta_q, "R": s.delta_r, "S": s.delta_s},
        "levels": levels,
        "amplitudes": amps,
        "checks": {
            "sum_delta": sum_delta,
            "sum_delta_ok": sum_delta.abs() <= 1e-12 * spread.max(f64::MIN_POSITIVE),
            "decoupled": p.c == 0.0,
            "tensor_defect": tensor_defect,
            "tensor_ok": p.c == 0.0 && tensor_defect <= 0.01,
        },
    });

    if let Some(mol) = cfg.molecule_params()? {
        let derived = composite_derived(&mol)?;
        let printed = molecule_k_factors(&mol)?;
        // pipeline rates are per unit of 1/Ω̃
        let ot = derived.omega_tilde;
        let (kp, kq, kr) = (results[0].k * ot, results[1].k * ot, results[2].k * ot);
        out["molecule"] = json!({
            "derived": derived,
            "printed_K": printed,
            "ratio_pq": printed.ratio_pq(),
            "ratio_rq": printed.ratio_rq(),
            "ratio_pq_closed": ratio_pq_closed(&mol),
            "ratio_rq_closed": ratio_rq_closed(&mol),
            "pipeline_K": {"P": kp, "Q": kq, "R": kr},
        });
    }

    if with_oracle {
        let start = Instant::now();
        let report = compare(&p, &results, &cfg.oracle_grid()?, cfg.oracle_tolerance)?;
        timing.insert("oracle".into(), json!(elapsed_ms(start)));
        out["oracle"] = serde_json::to_value(report)?;
    }
    if cfg.timing {
        out["timing_ms"] = Value::Object(timing);
    }
    Ok(Output::Json(out))
}

pub fn oracle(cfg: &RunConfig, with_compare: bool) -> Result<Output, CliError> {
    let p = cfg.action_params()?;
    let grid = cfg.oracle_grid()?;
    if with_compare {
        let results = flavor_results(cfg, &p)?;
        let report = compare(&p, &results, &grid, cfg.oracle_tolerance)?;
        return Ok(Output::Json(serde_json::to_value(report)?));
    }
    let levels = solve_2d(&p, &grid, cfg.oracle_levels)?;
    Ok(Output::Json(json!({"action_params": p, "grid": grid, "oracle": levels})))
}

fn point_config(base: &RunConfig, axis: &str, value: f64) -> Result<RunConfig, CliError> {
    let mut cfg = base.clone();
    if axis == HIERARCHY_AXIS {
        if cfg.mode != InputMode::Rates {
            return Err(CliError::Config(format!("axis {HIERARCHY_AXIS} needs mode = rates")));
        }
        let [kappa, eps, mu2, nu2, _, _] = cfg.rates;
        let new_eps = kappa / value;
        let scale = (new_eps / eps).powi(2);
        for (k, v) in [("epsilon", new_eps), ("mu2", mu2 * scale), ("nu2", nu2 * scale)] {
            cfg.set(k, &format!("{v:?}"))?;
        }
    } else {
        cfg.set(axis, &format!("{value:?}"))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn header(q: Quantity, axis: &str) -> Vec<String> {
    let cols: &[&str] = match q {
        Quantity::Pipeline => &["S_P", "S_Q", "S_R", "K_P", "K_Q", "K_R", "Delta_S", "Delta_P", "Delta_Q", "Delta_R"],
        Quantity::Molecule => &["K_P", "K_Q", "K_R", "ratio_pq", "ratio_rq", "ratio_pq_closed", "ratio_rq_closed"],
        Quantity::Fc => &[
            "kappa_over_epsilon",
            "Fc_closed_P",
            "Fc_closed_Q",
            "Fc_closed_R",
            "Fc_numeric_P",
            "Fc_numeric_Q",
            "Fc_numeric_R",
            "dev_P",
            "dev_Q",
            "dev_R",
        ],
    };
    std::iter::once(axis.to_string()).chain(cols.iter().map(|s| s.to_string())).chain(["error".to_string()]).collect()
}

fn row_values(cfg: &RunConfig, q: Quantity) -> Result<Vec<f64>, CliError> {
    match q {
        Quantity::Pipeline => {
            let p = cfg.action_params()?;
            let res = flavor_results(cfg, &p)?;
            let lv = energy_levels(&p, &res)?;
            let s = lv.splittings;
            Ok(vec![
                res[0].s0, res[1].s0, res[2].s0, res[0].k, res[1].k, res[2].k, s.delta_s, s.delta_p, s.delta_q,
                s.delta_r,
            ])
        }
        Quantity::Molecule => {
            let mol = cfg
                .molecule_params()?
                .ok_or_else(|| CliError::Config("quantity molecule needs mode = molecule".into()))?;
            let k = molecule_k_factors(&mol)?;
            Ok(vec![k.k_p, k.k_q, k.k_r, k.ratio_pq(), k.ratio_rq(), ratio_pq_closed(&mol), ratio_rq_closed(&mol)])
        }
        Quantity::Fc => {
            let r = derive_rates(&cfg.action_params()?)?;
            let fcfg = cfg.fc_config();
            let mut closed = [0.0; 3];
            let mut numeric = [0.0; 3];
            for (i, f) in Flavor::ALL.into_iter().enumerate() {
                closed[i] = fc_closed(f, &r);
                numeric[i] = fc_numeric(f, &r, &fcfg)?.total;
            }
            let mut v = vec![r.kappa / r.epsilon];
            v.extend(closed);
            v.extend(numeric);
            v.extend((0..3).map(|i| (numeric[i] - closed[i]).abs()));
            Ok(v)
        }
    }
}

/// One CSV row per axis point in axis order; a failing point keeps its row
/// with the error text and empty values.
pub fn sweep(cfg: &RunConfig, axis: &Axis, q: Quantity, output: Option<&PathBuf>) -> Result<Output, CliError> {
    let values = axis.values()?;
    // a bad key or mode fails the whole command before any work
    point_config(cfg, &axis.key, values[0])?;
    if q == Quantity::Molecule && cfg.mode != InputMode::Molecule {
        return Err(CliError::Config("quantity molecule needs mode = molecule".into()));
    }
    let head = header(q, &axis.key);
    let width = head.len() - 2;
    let rows: Vec<Vec<String>> = values
        .par_iter()
        .map(|&v| {
            let result = point_config(cfg, &axis.key, v).and_then(|c| row_values(&c, q));
            let mut row = vec![full(v)];
            match result {
                Ok(vals) => {
                    row.extend(vals.into_iter().map(full));
                    row.push(String::new());
                }
                Err(e) => {
                    row.extend(std::iter::repeat(String::new()).take(width));
                    row.push(e.to_string());
                }
            }
            row
        })
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&head).map_err(csv_err)?;
    for r in &rows {
        w.write_record(r).map_err(csv_err)?;
    }
    let text = finish(w)?;
    match output {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                ensure_dir(dir)?;
            }
            fs::write(path, &text)?;
            Ok(Output::Json(json!({"rows": rows.len(), "csv": path})))
        }
        None => Ok(Output::Text(text)),
    }
}
