//! `hetspec`: heterodyne spectra, Monte Carlo thermometry, cooling sweeps and blue-height curves.

mod commands;
mod config;
mod error;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Overrides;
use crate::error::{CliError, Result};

#[derive(Parser)]
#[command(name = "hetspec", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form sideband spectra for each field/detector combination.
    Spectrum(Common),
    /// Langevin Monte Carlo photocurrent, PSD and sideband thermometry.
    Simulate(Common),
    /// Cooling sweep over detuning and damping ratio.
    Cooling(Common),
    /// Blue sideband height against inverse temperature.
    Bluecurve(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config, or a manifest from an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `outputs.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `montecarlo.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Skip the regime guards.
    #[arg(long)]
    force: bool,
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("HETSPEC_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("HETSPEC_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size thread pool: {e}")))
}

fn run(cli: Cli) -> Result<Vec<String>> {
    init_threads()?;
    let (cmd, common): (fn(&config::RunConfig) -> Result<Vec<String>>, Common) = match cli.command {
        Command::Spectrum(c) => (commands::spectrum, c),
        Command::Simulate(c) => (commands::simulate, c),
        Command::Cooling(c) => (commands::cooling, c),
        Command::Bluecurve(c) => (commands::bluecurve, c),
    };
    let mut cfg = output::load_config(&common.config)?;
    cfg.apply(&Overrides {
        out: common.out,
        seed: common.seed,
        force: common.force,
    });
    cmd(&cfg)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
