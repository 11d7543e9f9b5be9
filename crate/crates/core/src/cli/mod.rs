//! Command-line runner: `spectrum`, `evolve`, `fig <id>` and `sweep`.

pub mod config;
pub mod run;
pub mod sweep;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{Experiment, HalfWidth, InitialState, ResolvedRun, RunConfig};
pub use run::{execute, RunOutcome};

use crate::error::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "qlattice", version, about = "Bosons in a lattice with a parabolic trap")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (flat JSON; a metadata.json from an earlier run also works).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `output` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for the random-packet optimality check.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Diagonalize and classify a spectrum.
    Spectrum,
    /// Evolve an initial state.
    Evolve,
    /// Reproduce a figure: 1, 2a, 2b, 3a, 3b, 3c, 4, 5a, 5b or 6.
    Fig { id: String },
    /// Run a list of configs in parallel (QLATTICE_THREADS caps the workers).
    Sweep,
}

extern "C" {
    fn openblas_set_num_threads(n: std::os::raw::c_int);
}

/// One BLAS thread per caller keeps outputs bit-reproducible and lets sweep
/// workers own the cores.
fn pin_blas_threads() {
    // SAFETY: plain setter in the linked OpenBLAS; no preconditions.
    unsafe { openblas_set_num_threads(1) }
}

fn load_config(path: Option<&Path>, command: &str) -> Result<RunConfig> {
    let path = path.ok_or_else(|| Error::config("--config", format!("`{command}` needs --config <path>")))?;
    RunConfig::load(path).map_err(|e| match e {
        Error::Io(io) => Error::config("--config", format!("cannot read {}: {io}", path.display())),
        Error::Json(json) => Error::config(path.display().to_string(), json.to_string()),
        other => other,
    })
}

fn output_dir(cli_out: Option<PathBuf>, run: &ResolvedRun) -> PathBuf {
    cli_out
        .or_else(|| run.output.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(run.experiment.to_string()))
}

/// Exit code on success; sweeps report their first failing run's code.
fn dispatch(cli: Cli) -> Result<i32> {
    pin_blas_threads();
    let mut cfg = match &cli.command {
        Command::Spectrum => load_config(cli.config.as_deref(), "spectrum")?,
        Command::Evolve => load_config(cli.config.as_deref(), "evolve")?,
        Command::Fig { id } => {
            let experiment = Experiment::from_figure_id(id)?;
            let mut cfg = match cli.config.as_deref() {
                Some(p) => load_config(Some(p), "fig")?,
                None => RunConfig::figure(experiment),
            };
            match cfg.experiment {
                Some(e) if e != experiment => {
                    return Err(Error::config("experiment", format!("config says {e} but `fig {id}` was requested")));
                }
                _ => cfg.experiment = Some(experiment),
            }
            cfg
        }
        Command::Sweep => {
            let path = cli
                .config
                .as_deref()
                .ok_or_else(|| Error::config("--config", "`sweep` needs --config <path>"))?;
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out/sweep"));
            let runs = sweep::parse_sweep(&std::fs::read_to_string(path)?)?;
            let entries = sweep::sweep(&runs, &out, cli.seed)?;
            let failed: Vec<_> = entries.iter().filter(|e| e.exit_code != 0).collect();
            println!("sweep: {} runs, {} failed -> {}", entries.len(), failed.len(), out.display());
            for entry in &failed {
                eprintln!("error: run {}: {}", entry.index, entry.error.as_deref().unwrap_or(""));
            }
            return Ok(failed.first().map_or(0, |e| e.exit_code));
        }
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    let run = cfg.resolve()?;
    match cli.command {
        Command::Spectrum if !run.experiment.is_spectrum() => {
            return Err(Error::config("experiment", format!("`spectrum` cannot run {}", run.experiment)));
        }
        Command::Evolve if run.experiment.is_spectrum() => {
            return Err(Error::config("experiment", format!("`evolve` cannot run {}", run.experiment)));
        }
        _ => {}
    }
    let out = output_dir(cli.out, &run);
    let outcome = execute(&run, &out)?;
    println!("{}: wrote {}", run.experiment, outcome.output.display());
    println!("{}", serde_json::to_string_pretty(&outcome.metadata["measured"])?);
    Ok(0)
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
