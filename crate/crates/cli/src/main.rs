// Copyright 2026 The gkp-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! `gkp`: config-driven runs over the lattice GKP toolkit.
//!
//! Exit codes: 0 success (including an optimization that stopped short of
//! its goal), 1 runtime I/O failure, 2 input error, 3 infeasible physics.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    /// Bad config, flag or missing input bundle.
    Input(String),
    /// Valid request the physics cannot satisfy.
    Infeasible(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Input(_) => 2,
            CliError::Infeasible(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl From<gkp_core::Error> for CliError {
    fn from(e: gkp_core::Error) -> Self {
        use gkp_core::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidArgument(_)
            | E::UnknownSpecies(_)
            | E::SpeciesData(_)
            | E::GridMismatch(_) => CliError::Input(msg),
            E::InsufficientDomain(_)
            | E::PropagationDiverged { .. }
            | E::BoundaryFlux { .. }
            | E::BoundStateShortfall { .. }
            | E::OutOfRange { .. }
            | E::Unreachable(_) => CliError::Infeasible(msg),
            E::Io(_) | E::Json(_) => CliError::Runtime(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "gkp",
    version,
    about = "GKP state preparation in a shaken optical lattice"
)]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run config; omitted sections take their defaults.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output root (overrides the config and $GKP_OUTPUT_ROOT).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Bound vibrational spectrum of one site.
    Spectrum(Common),
    /// GKP target wavefunction and its lattice Fock representation.
    Target {
        #[command(flatten)]
        common: Common,
        /// Also write basis size and depth over the squeezing sweep.
        #[arg(long)]
        sweep: bool,
    },
    /// Optimize a shaking waveform from the initial state to the target.
    Optimize(Common),
    /// Wigner maps, fidelity report and depth robustness of a result bundle.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Directory written by `optimize` (default: <out>/optimize).
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
    /// Depth and lifetime maps over power and wavelength.
    Feasibility {
        #[command(flatten)]
        common: Common,
        /// Single-point query: laser power, W.
        #[arg(long, requires = "wavelength")]
        power: Option<f64>,
        /// Single-point query: wavelength, m.
        #[arg(long, requires = "power")]
        wavelength: Option<f64>,
        /// Species for the single-point query (default: first configured).
        #[arg(long)]
        species: Option<String>,
    },
    /// Print the fully resolved default config.
    Config,
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.resolve_output(common.out.clone());
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Input("--jobs must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    match cli.command {
        Command::Spectrum(c) => commands::spectrum(&load(&c)?),
        Command::Target { common, sweep } => commands::target(&load(&common)?, sweep),
        Command::Optimize(c) => commands::optimize(&load(&c)?),
        Command::Analyze { common, bundle } => {
            let cfg = load(&common)?;
            let bundle = bundle.unwrap_or_else(|| cfg.output_root().join("optimize"));
            commands::analyze(&cfg, common.config.is_some(), &bundle)
        }
        Command::Feasibility {
            common,
            power,
            wavelength,
            species,
        } => {
            let cfg = load(&common)?;
            match (power, wavelength) {
                (Some(p), Some(l)) => commands::feasibility_point(&cfg, species.as_deref(), p, l),
                _ => commands::feasibility(&cfg),
            }
        }
        Command::Config => {
            let mut cfg = RunConfig::default();
            cfg.resolve_output(None);
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gkp: {e}");
            ExitCode::from(e.code())
        }
    }
}
