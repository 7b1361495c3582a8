//! `catenoid-lab`: spectrum, evolution, shooting and verification runs with
//! reproducible CSV/JSON output.

mod commands;
mod config;
mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use catenoid_core::Error as CoreError;
use clap::{Parser, Subcommand};

use crate::config::{parse_assignment, Config, UsageError};
use crate::output::{outdir, read_manifest, Output};

#[derive(Debug, Parser)]
#[command(name = "catenoid-lab", version, about = "Numerical laboratory for the catenoid in Minkowski space")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat key = value config file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Replay the config recorded in a run manifest.
    #[arg(long, global = true, value_name = "FILE", conflicts_with = "config")]
    manifest: Option<PathBuf>,

    /// Override any config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[arg(long, global = true)]
    ymax: Option<f64>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    cfl: Option<f64>,
    #[arg(long, global = true)]
    tmax: Option<f64>,
    #[arg(long, global = true, value_parser = ["outgoing", "frozen"])]
    boundary: Option<String>,
    #[arg(long, global = true)]
    preset: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    amplitude: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    a: Option<f64>,

    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Ground state, eigenvalue and zero modes of the linearized operator.
    Spectrum,
    /// Unstable-mode amplitude along a nonlinear run, with its Duhamel reconstruction.
    Modes,
    /// Nonlinear evolution.
    Evolve,
    /// Linearized evolution.
    Linear,
    /// Bisection for the threshold amplitude.
    Shoot,
    /// Collapsing round cylinder.
    Cylinder,
    /// Identity and oracle suite.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Modes => "modes",
            Command::Evolve => "evolve",
            Command::Linear => "linear",
            Command::Shoot => "shoot",
            Command::Cylinder => "cylinder",
            Command::Verify => "verify",
        }
    }
}

impl Cli {
    /// Named flags after `--set` assignments, so the named flags win.
    fn flag_layer(&self) -> Result<Vec<(String, String)>> {
        let mut out = self.set.iter().map(|s| parse_assignment(s)).collect::<Result<Vec<_>>>()?;
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        push("grid.y_max", self.ymax.map(|v| format!("{v:?}")));
        push("grid.n", self.n.map(|v| v.to_string()));
        push("evo.cfl", self.cfl.map(|v| format!("{v:?}")));
        push("evo.t_max", self.tmax.map(|v| format!("{v:?}")));
        push("evo.boundary", self.boundary.clone());
        push("data.preset", self.preset.clone());
        push("data.amplitude", self.amplitude.map(|v| format!("{v:?}")));
        push("data.a", self.a.map(|v| format!("{v:?}")));
        Ok(out)
    }

    fn file_layer(&self) -> Result<BTreeMap<String, String>> {
        if let Some(path) = &self.manifest {
            let m = read_manifest(path)?;
            if m.subcommand != self.command.name() {
                bail!(UsageError(format!(
                    "manifest was written by `{}`, not `{}`",
                    m.subcommand,
                    self.command.name()
                )));
            }
            return Ok(m.config);
        }
        match &self.config {
            Some(path) => Config::from_file(path),
            None => Ok(BTreeMap::new()),
        }
    }
}

fn run(cli: &Cli) -> Result<i32> {
    let cfg = Config::resolve(&cli.file_layer()?, &cli.flag_layer()?)?;
    let mut out = Output::new(&outdir(), cli.command.name())?;
    let code = match cli.command {
        Command::Spectrum => commands::spectrum(&cfg, &mut out),
        Command::Modes => commands::modes(&cfg, &mut out),
        Command::Evolve => commands::evolve(&cfg, &mut out, false),
        Command::Linear => commands::evolve(&cfg, &mut out, true),
        Command::Shoot => commands::shooting(&cfg, &mut out),
        Command::Cylinder => commands::cylinder(&cfg, &mut out),
        Command::Verify => commands::verify(&cfg, &mut out),
    };
    let (code, err) = match code {
        Ok(c) => (c, None),
        Err(e) => (exit_code(&e), Some(e)),
    };
    let manifest = out.finish(&cfg, code)?;
    log::info!("manifest written to {}", manifest.display());
    match err {
        Some(e) => Err(e),
        None => Ok(code),
    }
}

fn exit_code(e: &anyhow::Error) -> i32 {
    if e.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<CoreError>() {
        Some(CoreError::Inconclusive(_) | CoreError::BracketInvalid { .. }) => 4,
        Some(CoreError::NoConvergence(_) | CoreError::SpuriousBoundStates(_) | CoreError::FitUndefined(_)) => 4,
        Some(
            CoreError::InvalidInput(_)
            | CoreError::InvalidGrid(_)
            | CoreError::NonPositiveScale(_)
            | CoreError::DomainTooSmall { .. }
            | CoreError::Regularity { .. }
            | CoreError::NonLorentzian { .. }
            | CoreError::HyperbolicityLoss { .. },
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
