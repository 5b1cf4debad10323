use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use coupled_instantons::classical::{SolverConfig, TimeGrid};
use coupled_instantons::fluct::{FcConfig, FcSource, KConfig, KMode};
use coupled_instantons::molecule::{to_action_params, MoleculeParams};
use coupled_instantons::oracle::GridSpec;
use coupled_instantons::quad::QuadConfig;
use coupled_instantons::{derive_rates, ActionParams, Rates};

use crate::error::CliError;

pub const OUT_DIR_ENV: &str = "INSTANTON_OUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputMode {
    Action,
    Rates,
    Molecule,
}

impl InputMode {
    fn name(self) -> &'static str {
        match self {
            InputMode::Action => "action",
            InputMode::Rates => "rates",
            InputMode::Molecule => "molecule",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            InputMode::Action => &["a1", "a2", "b1", "b2", "c"],
            InputMode::Rates => &["kappa", "epsilon", "mu2", "nu2", "rate_a1", "rate_b1"],
            InputMode::Molecule => &["m", "a", "omega", "Omega", "L", "hbar"],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// Everything a command needs, filled from defaults, a config file and
/// `--set` overrides in that order.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: InputMode,
    pub action: [f64; 5],
    pub rates: [f64; 6],
    pub molecule: [f64; 6],
    pub x0: f64,
    pub y0: f64,
    pub k_mode: KMode,
    pub fc: FcSource,
    /// 0 picks T = 40/min(κ,ε).
    pub grid_period: f64,
    /// 0 picks h = 0.02/max(κ,ε).
    pub grid_spacing: f64,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
    pub richardson: bool,
    /// 0 picks 40/ε.
    pub fc_window: f64,
    pub quad_abs_tol: f64,
    pub quad_rel_tol: f64,
    pub oracle_half_width: f64,
    pub oracle_points: usize,
    pub oracle_levels: usize,
    pub oracle_tolerance: f64,
    pub t_max: f64,
    pub t_points: usize,
    pub format: Format,
    pub out_dir: PathBuf,
    pub timing: bool,
    explicit: BTreeSet<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let quad = QuadConfig::default();
        let solver = SolverConfig::default();
        let grid = GridSpec::default();
        Self {
            mode: InputMode::Action,
            action: [1.0, 0.5, 1.0, 0.08, 0.16],
            rates: [1.0, 0.4, 0.16, 0.16, 1.0, 1.0],
            molecule: [1.0, 1.0, 1.0, 100.0, 0.5, 1.0],
            x0: 1.0,
            y0: 1.0,
            k_mode: KMode::Closed,
            fc: FcSource::Closed,
            grid_period: 0.0,
            grid_spacing: 0.0,
            solver_tol: solver.tol,
            solver_max_iter: solver.max_iter,
            richardson: solver.richardson,
            fc_window: 0.0,
            quad_abs_tol: quad.abs_tol,
            quad_rel_tol: quad.rel_tol,
            oracle_half_width: grid.half_width,
            oracle_points: grid.points_per_axis,
            oracle_levels: 6,
            oracle_tolerance: 0.25,
            t_max: 20.0,
            t_points: 41,
            format: Format::Json,
            out_dir: std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")),
            timing: true,
            explicit: BTreeSet::new(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.trim().parse().map_err(|_| CliError::BadValue { key: key.into(), value: value.into() })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::BadValue { key: key.into(), value: value.into() }),
    }
}

fn choice<T: Copy>(key: &str, value: &str, options: &[(&str, T)]) -> Result<T, CliError> {
    options
        .iter()
        .find(|(name, _)| *name == value.trim())
        .map(|(_, v)| *v)
        .ok_or_else(|| CliError::BadValue { key: key.into(), value: value.into() })
}

impl RunConfig {
    /// Defaults, then `file` if given, then each `key=value` override.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            cfg.apply_text(&text)?;
        }
        for item in overrides {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("override '{item}' is not key=value")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value, got '{raw}'", no + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let slot = |mode: InputMode| mode.keys().iter().position(|k| *k == key);
        if key == "mode" {
            self.mode = choice(
                key,
                value,
                &[("action", InputMode::Action), ("rates", InputMode::Rates), ("molecule", InputMode::Molecule)],
            )?;
        } else if let Some(i) = slot(InputMode::Action) {
            self.action[i] = parse(key, value)?;
        } else if let Some(i) = slot(InputMode::Rates) {
            self.rates[i] = parse(key, value)?;
        } else if let Some(i) = slot(InputMode::Molecule) {
            self.molecule[i] = parse(key, value)?;
        } else {
            match key {
                "x0" => self.x0 = parse(key, value)?,
                "y0" => self.y0 = parse(key, value)?,
                "k_mode" => self.k_mode = choice(key, value, &[("closed", KMode::Closed), ("bvp", KMode::Bvp)])?,
                "fc" => self.fc = choice(key, value, &[("closed", FcSource::Closed), ("numeric", FcSource::Numeric)])?,
                "grid_period" => self.grid_period = parse(key, value)?,
                "grid_spacing" => self.grid_spacing = parse(key, value)?,
                "solver_tol" => self.solver_tol = parse(key, value)?,
                "solver_max_iter" => self.solver_max_iter = parse(key, value)?,
                "richardson" => self.richardson = parse_bool(key, value)?,
                "fc_window" => self.fc_window = parse(key, value)?,
                "quad_abs_tol" => self.quad_abs_tol = parse(key, value)?,
                "quad_rel_tol" => self.quad_rel_tol = parse(key, value)?,
                "oracle_half_width" => self.oracle_half_width = parse(key, value)?,
                "oracle_points" => self.oracle_points = parse(key, value)?,
                "oracle_levels" => self.oracle_levels = parse(key, value)?,
                "oracle_tolerance" => self.oracle_tolerance = parse(key, value)?,
                "t_max" => self.t_max = parse(key, value)?,
                "t_points" => self.t_points = parse(key, value)?,
                "format" => self.format = choice(key, value, &[("json", Format::Json), ("csv", Format::Csv)])?,
                "out_dir" => self.out_dir = PathBuf::from(value),
                "timing" => self.timing = parse_bool(key, value)?,
                _ => return Err(CliError::UnknownKey(key.into())),
            }
        }
        self.explicit.insert(key.to_string());
        Ok(())
    }

    /// Checks the config before any command runs.
    pub fn validate(&self) -> Result<(), CliError> {
        for other in [InputMode::Action, InputMode::Rates, InputMode::Molecule] {
            if other == self.mode {
                continue;
            }
            if let Some(k) = other.keys().iter().find(|k| self.explicit.contains(**k)) {
                return Err(CliError::Config(format!(
                    "key '{k}' belongs to {} input but mode = {}",
                    other.name(),
                    self.mode.name()
                )));
            }
        }
        let positive = [
            ("x0", self.x0),
            ("y0", self.y0),
            ("solver_tol", self.solver_tol),
            ("quad_abs_tol", self.quad_abs_tol),
            ("oracle_tolerance", self.oracle_tolerance),
        ];
        for (k, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Config(format!("{k} must be positive, got {v}")));
            }
        }
        for (k, v) in [("grid_period", self.grid_period), ("grid_spacing", self.grid_spacing), ("fc_window", self.fc_window), ("t_max", self.t_max), ("quad_rel_tol", self.quad_rel_tol)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CliError::Config(format!("{k} must be non-negative, got {v}")));
            }
        }
        if self.t_points == 0 || self.solver_max_iter == 0 || self.oracle_levels == 0 {
            return Err(CliError::Config("t_points, solver_max_iter and oracle_levels must be positive".into()));
        }
        self.oracle_grid()?;
        Ok(())
    }

    pub fn molecule_params(&self) -> Result<Option<MoleculeParams>, CliError> {
        if self.mode != InputMode::Molecule {
            return Ok(None);
        }
        let [m, a, omega, big_omega, l, hbar] = self.molecule;
        let mol = MoleculeParams { m, a, omega, big_omega, l, hbar };
        mol.validate().map_err(CliError::Input)?;
        Ok(Some(mol))
    }

    pub fn action_params(&self) -> Result<ActionParams, CliError> {
        match self.mode {
            InputMode::Action => {
                let [a1, a2, b1, b2, c] = self.action;
                ActionParams::new(a1, a2, b1, b2, c).map_err(CliError::Input)
            }
            InputMode::Rates => {
                let [kappa, epsilon, mu2, nu2, a1, b1] = self.rates;
                Rates { kappa, epsilon, mu2, nu2 }.to_params(a1, b1).map_err(CliError::Input)
            }
            InputMode::Molecule => {
                let mol = self.molecule_params()?.expect("molecule mode");
                to_action_params(&mol).map_err(CliError::Input)
            }
        }
    }

    pub fn time_grid(&self, params: &ActionParams) -> Result<Option<TimeGrid>, CliError> {
        if self.grid_period == 0.0 && self.grid_spacing == 0.0 {
            return Ok(None);
        }
        let r = derive_rates(params).map_err(CliError::Input)?;
        let auto = TimeGrid::for_rates(&r);
        let period = if self.grid_period > 0.0 { self.grid_period } else { auto.period };
        let h = if self.grid_spacing > 0.0 { self.grid_spacing } else { auto.spacing() };
        Ok(Some(TimeGrid::with_spacing(period, h)))
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig { tol: self.solver_tol, max_iter: self.solver_max_iter, richardson: self.richardson }
    }

    pub fn fc_config(&self) -> FcConfig {
        FcConfig {
            window: (self.fc_window > 0.0).then_some(self.fc_window),
            quad: QuadConfig { abs_tol: self.quad_abs_tol, rel_tol: self.quad_rel_tol, ..QuadConfig::default() },
            ..FcConfig::default()
        }
    }

    pub fn k_config(&self, params: &ActionParams) -> Result<KConfig, CliError> {
        Ok(KConfig {
            mode: self.k_mode,
            fc: self.fc,
            grid: self.time_grid(params)?,
            solver: self.solver(),
            fc_cfg: self.fc_config(),
        })
    }

    pub fn oracle_grid(&self) -> Result<GridSpec, CliError> {
        GridSpec::new(self.oracle_half_width, self.oracle_points).map_err(|e| CliError::Config(e.to_string()))
    }

    /// The defaults as a config file.
    pub fn render(&self) -> String {
        let f = |v: f64| format!("{v:?}");
        let mut out = vec![format!("mode = {}", self.mode.name())];
        for (mode, vals) in [
            (InputMode::Action, &self.action[..]),
            (InputMode::Rates, &self.rates[..]),
            (InputMode::Molecule, &self.molecule[..]),
        ] {
            // keys of the inactive modes stay commented out so the file loads
            let lead = if mode == self.mode { "" } else { "# " };
            out.push(format!("# {} input", mode.name()));
            for (k, v) in mode.keys().iter().zip(vals) {
                out.push(format!("{lead}{k} = {}", f(*v)));
            }
        }
        out.push("# pipeline".into());
        let k_mode = match self.k_mode {
            KMode::Closed => "closed",
            KMode::Bvp => "bvp",
        };
        let fc = match self.fc {
            FcSource::Closed => "closed",
            FcSource::Numeric => "numeric",
        };
        let format = match self.format {
            Format::Json => "json",
            Format::Csv => "csv",
        };
        out.extend([
            format!("x0 = {}", f(self.x0)),
            format!("y0 = {}", f(self.y0)),
            format!("k_mode = {k_mode}"),
            format!("fc = {fc}"),
            format!("grid_period = {}", f(self.grid_period)),
            format!("grid_spacing = {}", f(self.grid_spacing)),
            format!("solver_tol = {}", f(self.solver_tol)),
            format!("solver_max_iter = {}", self.solver_max_iter),
            format!("richardson = {}", self.richardson),
            format!("fc_window = {}", f(self.fc_window)),
            format!("quad_abs_tol = {}", f(self.quad_abs_tol)),
            format!("quad_rel_tol = {}", f(self.quad_rel_tol)),
            format!("oracle_half_width = {}", f(self.oracle_half_width)),
            format!("oracle_points = {}", self.oracle_points),
            format!("oracle_levels = {}", self.oracle_levels),
            format!("oracle_tolerance = {}", f(self.oracle_tolerance)),
            format!("t_max = {}", f(self.t_max)),
            format!("t_points = {}", self.t_points),
            format!("format = {format}"),
            format!("out_dir = {}", self.out_dir.display()),
            format!("timing = {}", self.timing),
        ]);
        out.join("\n") + "\n"
    }
}
