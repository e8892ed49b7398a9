//! Command-line front end for the decoy-state BB84 simulator.

pub mod commands;
pub mod config;
pub mod report;

use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use crate::commands::{cmd_analyze, cmd_simulate, cmd_sweep, write_sweep_csv, Spacing, SweepParam, SweepSpec};
use crate::config::{resolve, FileConfig, Overrides};

pub use crate::report::RunReport;

/// Exit status for operational errors (bad config, I/O, infeasible adversary).
pub const EXIT_ERROR: u8 = 1;

#[derive(Debug, Parser)]
#[command(name = "decoy-qkd", version, about = "Decoy-state BB84 simulator and PNS security calculator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON configuration file
    #[arg(short, long)]
    pub config: PathBuf,
    /// Number of emitted pulses (overrides the file)
    #[arg(long)]
    pub pulses: Option<u64>,
    /// Random seed (overrides the file)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Decoy replacement probability (overrides the file)
    #[arg(long)]
    pub alpha: Option<f64>,
}

impl CommonArgs {
    fn session_config(&self) -> Result<decoy_core::SessionConfig> {
        let file = FileConfig::load(&self.config)?;
        resolve(
            &file,
            &Overrides {
                pulses: self.pulses,
                seed: self.seed,
                alpha: self.alpha,
            },
        )
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate yields and bounds in closed form
    Analyze(CommonArgs),
    /// Run a Monte Carlo session and test the measured yields
    Simulate(CommonArgs),
    /// Evaluate the closed-form condition over a range of one parameter, as CSV
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Parameter to vary: eta, mu, mu_prime or epsilon
    #[arg(long)]
    pub param: String,
    #[arg(long)]
    pub start: f64,
    #[arg(long)]
    pub stop: f64,
    /// Additive step between points
    #[arg(long, conflicts_with = "points")]
    pub step: Option<f64>,
    /// Number of points between start and stop, inclusive
    #[arg(long)]
    pub points: Option<usize>,
    /// Space the points geometrically (requires --points)
    #[arg(long, requires = "points")]
    pub log: bool,
    /// Write CSV here instead of standard output
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

impl SweepArgs {
    pub fn spec(&self) -> Result<SweepSpec> {
        let spacing = match (self.step, self.points, self.log) {
            (Some(step), None, false) => Spacing::Step(step),
            (None, Some(n), false) => Spacing::Linear(n),
            (None, Some(n), true) => Spacing::Log(n),
            _ => bail!("give either --step or --points"),
        };
        Ok(SweepSpec {
            param: self.param.parse::<SweepParam>()?,
            start: self.start,
            stop: self.stop,
            spacing,
        })
    }
}

fn emit(report: &RunReport) -> Result<u8> {
    println!("{}", serde_json::to_string_pretty(report)?);
    eprint!("{}", report.summary());
    Ok(report.exit_code())
}

/// Run a parsed command; returns the process exit status.
pub fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Analyze(args) => emit(&cmd_analyze(&args.session_config()?)?),
        Command::Simulate(args) => emit(&cmd_simulate(&args.session_config()?)?),
        Command::Sweep(args) => {
            let spec = args.spec()?;
            let rows = cmd_sweep(&args.common.session_config()?, &spec)?;
            match &args.output {
                Some(path) => write_sweep_csv(&rows, BufWriter::new(File::create(path)?))?,
                None => write_sweep_csv(&rows, io::stdout().lock())?,
            }
            eprintln!("{} sweep points over {}", rows.len(), spec.param.name());
            Ok(0)
        }
    }
}
