//! The `smim` command line: configuration, commands and reports.

mod commands;
mod config;
mod report;
mod scaling;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{cmd_complexity, cmd_estimate, cmd_generate, resolve_steps, ComplexityReport, GenerateOutput, ResolvedSteps};
pub use config::{
    DataConfig, EstimatorConfig, ExperimentConfig, Grid, KernelChoice, PlanMode, PlannerConfig, RanksSetting,
    ScalingConfig, SymbolicConfig,
};
pub use report::{Aggregates, EnvironmentStamp, RunReport, TrialRecord};
pub use scaling::{cmd_scaling, run_trial, trial_seed, ScalingOutput, ScalingRow, SCALING_HEADER};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_STALL: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "smim", version, about = "Harmonic tensor unfolding for spherical multi-index models")]
pub struct Cli {
    /// Experiment configuration (TOML sections, flat keys).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "SMIM_THREADS")]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a dataset and its planted-frame sidecar.
    Generate,
    /// Recover the index subspace from a dataset.
    Estimate {
        dataset: PathBuf,
    },
    /// Plan harmonic degrees for the configured link.
    Complexity {
        /// Use the prescribed coefficient scalings in `[planner.symbolic]`.
        #[arg(long)]
        symbolic: bool,
    },
    /// Success rate over a grid of `(d, n)`.
    Scaling {
        /// Success threshold on the frame distance.
        #[arg(long)]
        threshold: Option<f64>,
    },
}

/// Settings shared by every command after flags are merged into the config.
#[derive(Clone, Debug)]
pub struct RunContext {
    pub out: PathBuf,
    pub seed: u64,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Stall(_) | Error::Degenerate(_) => EXIT_STALL,
        Error::Io(_) | Error::Format(_) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

/// Parse arguments, run the command and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: Cli) -> crate::Result<()> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(Error::Config("`--threads` must be at least 1".into()));
        }
        // A global pool may already exist when called repeatedly in-process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("missing `--config <path>`".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    std::fs::create_dir_all(&cli.out)?;
    let ctx = RunContext { out: cli.out.clone(), seed: cfg.seed };
    match cli.command {
        Command::Generate => {
            let g = cmd_generate(&cfg, &ctx)?;
            println!("wrote {} ({} samples) and {}", g.dataset.display(), g.n, g.sidecar.display());
            Ok(())
        }
        Command::Estimate { dataset } => {
            let report = cmd_estimate(&cfg, &ctx, &dataset)?;
            if let Some(dist) = report.trials.first().and_then(|t| t.frame_distance) {
                println!("frame_distance {dist:.6}");
            }
            match report.trials.first().and_then(|t| t.stalled.clone()) {
                Some(why) => Err(Error::Stall(why)),
                None => Ok(()),
            }
        }
        Command::Complexity { symbolic } => {
            let r = cmd_complexity(&cfg, &ctx, symbolic)?;
            print!("{}", r.table);
            Ok(())
        }
        Command::Scaling { threshold } => {
            if let Some(t) = threshold {
                cfg.scaling.threshold = t;
                cfg.validate()?;
            }
            let rows = cmd_scaling(&cfg, &ctx)?;
            println!("{SCALING_HEADER}");
            for r in &rows.rows {
                println!("{}", r.csv_line());
            }
            if let Some(m) = &rows.resume_marker {
                eprintln!("warning: time budget exhausted; {m}");
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests;
