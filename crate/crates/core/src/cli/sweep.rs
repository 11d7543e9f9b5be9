//! Fans independent runs out over a thread pool.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::run::execute;
use crate::error::{Error, Result};

pub const THREADS_ENV: &str = "QLATTICE_THREADS";

/// A list of configs, either bare or under `runs`.
#[derive(Deserialize)]
#[serde(untagged)]
enum SweepFile {
    Bare(Vec<RunConfig>),
    Wrapped { runs: Vec<RunConfig> },
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepEntry {
    pub index: usize,
    pub output: PathBuf,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn parse_sweep(text: &str) -> Result<Vec<RunConfig>> {
    // Parse the outer document first so syntax errors carry line numbers.
    let value: serde_json::Value = serde_json::from_str(text)?;
    let file: SweepFile = serde_json::from_value(value)
        .map_err(|e| Error::config("runs", format!("expected a list of run configs: {e}")))?;
    let runs = match file {
        SweepFile::Bare(r) | SweepFile::Wrapped { runs: r } => r,
    };
    if runs.is_empty() {
        return Err(Error::config("runs", "empty sweep"));
    }
    Ok(runs)
}

/// Worker count from `QLATTICE_THREADS`, defaulting to the available cores.
pub fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::config(THREADS_ENV, format!("expected a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs every config into `out/NNN-<experiment>` and writes `out/sweep.json`.
/// Configs are resolved up front so a bad entry fails before any work starts.
pub fn sweep(runs: &[RunConfig], out: &Path, seed: Option<u64>) -> Result<Vec<SweepEntry>> {
    let resolved = runs
        .iter()
        .enumerate()
        .map(|(i, cfg)| {
            let mut cfg = cfg.clone();
            if seed.is_some() {
                cfg.seed = seed;
            }
            cfg.resolve().map_err(|e| Error::config(format!("runs[{i}]"), e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let entries: Vec<SweepEntry> = pool.install(|| {
        resolved
            .par_iter()
            .enumerate()
            .map(|(index, run)| {
                let dir = out.join(format!("{index:03}-{}", run.experiment));
                match execute(run, &dir) {
                    Ok(_) => SweepEntry {
                        index,
                        output: dir,
                        exit_code: 0,
                        error: None,
                    },
                    Err(e) => SweepEntry {
                        index,
                        output: dir,
                        exit_code: e.exit_code(),
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect()
    });
    std::fs::create_dir_all(out)?;
    let text = serde_json::to_string_pretty(&entries)?;
    std::fs::write(out.join("sweep.json"), text + "\n")?;
    Ok(entries)
}
