//! Command-line front end: configuration, manifests, caching and the subcommands.
//!
//! Every command takes a TOML config, or any output file, whose embedded manifest then
//! serves as the config. Exit codes: 0 success, 2 config error, 3 numerical divergence,
//! 4 ADO budget exceeded, 1 anything else.

pub mod cache;
pub mod commands;
pub mod config;
pub mod manifest;
pub mod pipeline;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use cache::{Cache, CACHE_ENV};
pub use config::Config;
pub use manifest::RunManifest;
pub use pipeline::{analyze_m, obtain_fit, HeomRunner, MAnalysis, Model, Relaxation};

use crate::error::Result;

#[derive(Debug, Parser)]
#[command(
    name = "sbheom",
    version,
    about = "Spin-boson dynamics and spectra by hierarchical equations of motion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML config, or an output file whose manifest is rerun.
    config: PathBuf,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample C(t), fit the decomposition, write the fit and its error report.
    FitBath(RunArgs),
    /// Relax from a factorized state and write M(t').
    Relax(RunArgs),
    /// Linear response chi(t) from the (cached) equilibrium.
    Respond(RunArgs),
    /// Absorption spectrum chi''(omega) and its peaks.
    Spectrum(RunArgs),
    /// Rate kernel, kappa_0 and delta M(omega) of the relaxation.
    Kernel(RunArgs),
    /// Resumable (s, alpha) scan with phase-boundary estimates.
    Sweep(RunArgs),
    /// Print the manifest embedded in an output file.
    Inspect { file: PathBuf },
}

type Run = fn(&Config, &std::path::Path, &Cache) -> Result<Vec<PathBuf>>;

fn dispatch(command: Command) -> Result<()> {
    let (args, run): (RunArgs, Run) = match command {
        Command::Inspect { file } => {
            print!("{}", commands::inspect(&file)?);
            return Ok(());
        }
        Command::FitBath(a) => (a, commands::fit_bath),
        Command::Relax(a) => (a, commands::relax),
        Command::Respond(a) => (a, commands::respond),
        Command::Spectrum(a) => (a, commands::spectrum),
        Command::Kernel(a) => (a, commands::kernel),
        Command::Sweep(a) => (a, commands::sweep),
    };
    let config = Config::load(&args.config)?;
    let out = args.out.unwrap_or_else(|| config.output.dir.clone());
    let cache = Cache::from_env();
    log::info!("cache directory {}", cache.dir().display());
    for path in run(&config, &out, &cache)? {
        println!("{}", path.display());
    }
    Ok(())
}

/// Runs the tool on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
