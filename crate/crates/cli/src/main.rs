mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use coupled_instantons::{ActionParams, Flavor};

use commands::{Axis, Method, Output, Quantity};
use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "instanton", version, about = "Coupled-instanton tunnelling in a four-well potential")]
struct Cli {
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Action constants from JSON (an ActionParams object or `params` output).
    #[arg(long, global = true)]
    params_json: Option<PathBuf>,

    /// Worker threads for sweeps and the oracle.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlavorArg {
    P,
    Q,
    R,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Bvp,
    Analytic,
}

#[derive(Clone, Copy, ValueEnum)]
enum QuantityArg {
    Pipeline,
    Molecule,
    Fc,
}

#[derive(Subcommand)]
enum Cmd {
    /// Action constants, rates and hierarchy grade.
    Params,
    /// Classical profile of one flavor.
    Classical {
        #[arg(long, value_enum, ignore_case = true)]
        flavor: FlavorArg,
        #[arg(long, value_enum, default_value = "bvp")]
        method: MethodArg,
    },
    /// Evaluate or calibrate the zero-mode-projected propagator.
    Propagator {
        #[arg(long)]
        kappa: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        tp: f64,
        #[arg(long, value_delimiter = ',', default_value = "-4,-2,-1,0,1,2,4", allow_hyphen_values = true)]
        t: Vec<f64>,
        #[arg(long)]
        calibrate: bool,
    },
    /// R0 and the per-flavor fluctuation factors.
    Fluct,
    /// Full pipeline: rates, levels and amplitudes.
    Splittings {
        /// Append a grid-oracle comparison.
        #[arg(long)]
        oracle: bool,
    },
    /// Finite-difference levels of the four-well Hamiltonian.
    Oracle {
        #[arg(long)]
        compare: bool,
    },
    /// CSV table over one config key.
    Sweep {
        #[arg(long)]
        axis: String,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long)]
        points: usize,
        #[arg(long)]
        geom: bool,
        #[arg(long, value_enum, default_value = "pipeline")]
        quantity: QuantityArg,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print every config key with its default.
    Defaults,
}

fn params_overrides(path: &PathBuf) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path)?;
    let v: serde_json::Value = serde_json::from_str(&text)?;
    let obj = v.get("action_params").cloned().unwrap_or(v);
    let p: ActionParams = serde_json::from_value(obj)?;
    let mut out = vec!["mode=action".to_string()];
    for (k, x) in [("a1", p.a1), ("a2", p.a2), ("b1", p.b1), ("b2", p.b2), ("c", p.c)] {
        out.push(format!("{k}={x:?}"));
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<Output, CliError> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    if let Cmd::Defaults = cli.cmd {
        return Ok(Output::Text(RunConfig::default().render()));
    }
    let mut overrides = match &cli.params_json {
        Some(p) => params_overrides(p)?,
        None => Vec::new(),
    };
    overrides.extend(cli.set.iter().cloned());
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    match cli.cmd {
        Cmd::Params => commands::params(&cfg),
        Cmd::Classical { flavor, method } => {
            let flavor = match flavor {
                FlavorArg::P => Flavor::P,
                FlavorArg::Q => Flavor::Q,
                FlavorArg::R => Flavor::R,
            };
            let method = match method {
                MethodArg::Bvp => Method::Bvp,
                MethodArg::Analytic => Method::Analytic,
            };
            commands::classical(&cfg, flavor, method)
        }
        Cmd::Propagator { kappa, tp, t, calibrate } => commands::propagator(&cfg, kappa, tp, &t, calibrate),
        Cmd::Fluct => commands::fluct(&cfg),
        Cmd::Splittings { oracle } => commands::splittings(&cfg, oracle),
        Cmd::Oracle { compare } => commands::oracle(&cfg, compare),
        Cmd::Sweep { axis, from, to, points, geom, quantity, output } => {
            let q = match quantity {
                QuantityArg::Pipeline => Quantity::Pipeline,
                QuantityArg::Molecule => Quantity::Molecule,
                QuantityArg::Fc => Quantity::Fc,
            };
            let axis = Axis { key: axis, from, to, points, geometric: geom };
            commands::sweep(&cfg, &axis, q, output.as_ref())
        }
        Cmd::Defaults => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Output::Json(v)) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("serialisable"));
            ExitCode::SUCCESS
        }
        Ok(Output::Text(t)) => {
            print!("{t}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
