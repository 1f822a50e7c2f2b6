mod config;
mod error;
mod plot;
mod ratefn;
mod report;
mod simulate;
mod spectral;
mod svg;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use brownian_scenery::checks::VerifyConfig;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::report::{load_config, Report};

#[derive(Parser)]
#[command(name = "bscenery", version, about = "Large deviations of Brownian occupation times in random scenery")]
struct Cli {
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Run {
    /// JSON config, or any CSV/JSON output of an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Validate the config, print it with defaults filled in, and stop.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Rate functions on a box: annealed, quenched, j1, quenched_l, dual, product_form.
    Ratefn(Run),
    /// Monte Carlo experiments: speed_fit, tail, ks_scaling, exit_time, feynman_kac.
    Simulate(Run),
    /// Principal eigenvalue and ground-state density of -½Δ - V.
    Spectral(Run),
    /// Property suite; exit code 1 names the failed checks.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Run only the checks whose name contains this string.
        #[arg(long)]
        filter: Option<String>,
        #[arg(long)]
        dry_run: bool,
    },
    /// SVG line plot of two columns of an output CSV.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
        /// Output file (default: the input with an .svg extension).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn echo(cfg: &impl Serialize) -> CliResult<()> {
    println!("{}", serde_json::to_string_pretty(cfg).map_err(|e| CliError::Config(e.to_string()))?);
    Ok(())
}

fn staged<T: Serialize + serde::de::DeserializeOwned>(
    run: &Run,
    command: &'static str,
    validate: impl Fn(&T) -> CliResult<()>,
    exec: impl Fn(&T, &Report) -> CliResult<()>,
) -> CliResult<()> {
    let cfg: T = load_config(&run.config, command)?;
    validate(&cfg)?;
    if run.dry_run {
        return echo(&cfg);
    }
    exec(&cfg, &Report::new(&run.out, command, &cfg)?)
}

fn dispatch(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Ratefn(run) => staged(&run, "ratefn", |c: &ratefn::RatefnConfig| c.validate().map(drop), ratefn::run),
        Command::Simulate(run) => staged(&run, "simulate", simulate::SimulateConfig::validate, simulate::run),
        Command::Spectral(run) => staged(&run, "spectral", |c: &spectral::SpectralConfig| c.validate().map(drop), spectral::run),
        Command::Verify { config, out, filter, dry_run } => {
            let cfg: VerifyConfig = match &config {
                Some(p) => load_config(p, "verify")?,
                None => VerifyConfig::default(),
            };
            verify::validate(filter.as_deref())?;
            if dry_run {
                return echo(&cfg);
            }
            verify::run(&cfg, filter.as_deref(), &Report::new(&out, "verify", &cfg)?)
        }
        Command::Plot { input, x, y, out } => {
            let out = out.unwrap_or_else(|| input.with_extension("svg"));
            plot::run(Path::new(&input), x.as_deref(), y.as_deref(), &out)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
