//! `procmat` command line: gate χ extraction, Ω_B sweeps, concatenation,
//! χ distances and the Toffoli comparison, each driven by one JSON config.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "procmat",
    version,
    about = "Process matrices of Rydberg-blockade gates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base seed of all trajectory streams.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trajectories per ensemble.
    #[arg(long)]
    pub traj: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<String>,
    /// KEY=VALUE with a dotted key; VALUE is read as JSON, else as a string.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// χ of a simulated gate (CNOT, C2NOT or identity).
    GateChi(CommonArgs),
    /// C-NOT distance to ideal over the Ω_B grid.
    Sweep(CommonArgs),
    /// χ of a circuit by concatenating gate χ files.
    Concat(CommonArgs),
    /// Trace distance between two χ files.
    Distance {
        #[command(flatten)]
        common: CommonArgs,
        /// The two χ files (instead of `distance.a` / `distance.b`).
        files: Vec<String>,
    },
    /// χ_cat, χ_cir and multi-qubit C2NOT against the ideal Toffoli.
    ToffoliCompare(CommonArgs),
}

fn load(
    verb: &str,
    common: &CommonArgs,
    extra: Vec<String>,
) -> Result<config::RunConfig, CliError> {
    let mut assignments = common.overrides.clone();
    assignments.extend(extra);
    let o = config::Overrides {
        seed: common.seed,
        traj: common.traj,
        out: common.out.clone(),
        assignments,
    };
    let cfg = config::load(common.config.as_deref(), &o)?;
    cfg.check_mode(verb)?;
    Ok(cfg)
}

/// Runs one command; everything written goes under the configured output directory.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let start = Instant::now();
    let (verb, cfg) = match &cli.command {
        Command::GateChi(c) => ("gate-chi", load("gate-chi", c, vec![])?),
        Command::Sweep(c) => ("sweep", load("sweep", c, vec![])?),
        Command::Concat(c) => ("concat", load("concat", c, vec![])?),
        Command::ToffoliCompare(c) => ("toffoli-compare", load("toffoli-compare", c, vec![])?),
        Command::Distance { common, files } => {
            let extra = match files.as_slice() {
                [] => vec![],
                [a, b] => vec![
                    format!("distance.a={}", serde_json::Value::from(a.as_str())),
                    format!("distance.b={}", serde_json::Value::from(b.as_str())),
                ],
                _ => {
                    return Err(CliError::Config(
                        "distance takes exactly two χ files".into(),
                    ))
                }
            };
            ("distance", load("distance", common, extra)?)
        }
    };
    let mut out = output::RunOutput::new(verb, &cfg);
    match verb {
        "gate-chi" => commands::gate_chi(&cfg, &mut out)?,
        "sweep" => commands::sweep(&cfg, &mut out)?,
        "concat" => commands::concat(&cfg, &mut out)?,
        "toffoli-compare" => {
            commands::toffoli_compare(&cfg, &mut out)?;
        }
        "distance" => {
            let t = commands::distance(&cfg, &mut out)?;
            println!("{t}");
        }
        _ => unreachable!("verbs come from the parser"),
    }
    out.finish(start.elapsed().as_secs_f64())
}
