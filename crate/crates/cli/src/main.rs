//! `rugos` — road-surface roughness analysis for point clouds.
//!
//! Subcommands compose into the full workflow: `synth` generates
//! calibration surfaces, `convert` turns Gaussian-splat assets into point
//! clouds, `prep` crops/aligns/normalizes, `roughness` computes
//! multi-radius roughness fields, and `compare` runs the whole chain over
//! a manifest of clouds and renders a comparison report.
//!
//! Conventions shared by every subcommand: data goes to files or standard
//! output, diagnostics go to standard error, and the exit status is 0
//! exactly when no error was reported (2 otherwise).

mod commands;
mod manifest;

use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "rugos",
    version,
    about = "Surface-roughness analysis for point clouds and splat assets",
    propagate_version = true
)]
struct Cli {
    /// Worker thread count (default: the RUGOS_THREADS environment
    /// variable if set, otherwise all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Stamp outputs with 1970-01-01T00:00:00Z instead of the wall clock,
    /// making sidecars and reports byte-reproducible.
    #[arg(long, global = true)]
    fixed_clock: bool,

    /// Seed for randomized steps (density-sampled splat conversion).
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic calibration surface from a JSON description.
    Synth(commands::synth::SynthArgs),
    /// Convert a Gaussian-splat PLY into a point cloud.
    Convert(commands::convert::ConvertArgs),
    /// Crop, align, and normalize a cloud (in that order).
    Prep(commands::prep::PrepArgs),
    /// Compute roughness scalar fields at one or more radii.
    Roughness(commands::roughness::RoughnessArgs),
    /// Run the full chain over a manifest of clouds and render a report.
    Compare(commands::compare::CompareArgs),
}

/// Global run settings threaded through to the subcommands.
pub(crate) struct RunContext {
    pub seed: u64,
    pub fixed_clock: bool,
}

impl RunContext {
    /// RFC 3339 timestamp for sidecars and reports.
    pub fn timestamp(&self) -> String {
        if self.fixed_clock {
            "1970-01-01T00:00:00Z".to_string()
        } else {
            chrono::Utc::now()
                .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            report_error(&err);
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    configure_worker_pool(cli.threads)?;
    let ctx = RunContext {
        seed: cli.seed,
        fixed_clock: cli.fixed_clock,
    };
    match cli.command {
        Command::Synth(args) => commands::synth::run(&args),
        Command::Convert(args) => commands::convert::run(&args, &ctx),
        Command::Prep(args) => commands::prep::run(&args, &ctx),
        Command::Roughness(args) => commands::roughness::run(&args, &ctx),
        Command::Compare(args) => commands::compare::run(&args, &ctx),
    }
}

/// Size the global worker pool from `--threads`, falling back to the
/// RUGOS_THREADS environment variable. Without either, the pool keeps its
/// default size (all cores).
fn configure_worker_pool(flag: Option<usize>) -> Result<()> {
    let count = match flag {
        Some(n) => Some(n),
        None => match std::env::var("RUGOS_THREADS") {
            Ok(text) => Some(text.parse::<usize>().with_context(|| {
                format!("RUGOS_THREADS must be a positive integer, got {text:?}")
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = count {
        if n == 0 {
            bail!("worker count must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("initializing the worker pool")?;
    }
    Ok(())
}

/// Print `error: <kind>: <chain>` to standard error. The kind is the
/// stable name of the underlying library error when there is one, so
/// scripts can match on it without parsing prose.
fn report_error(err: &anyhow::Error) {
    let kind = err
        .chain()
        .find_map(|cause| cause.downcast_ref::<rugos_core::Error>())
        .map(rugos_core::Error::name);
    match kind {
        Some(kind) => eprintln!("error: {kind}: {err:#}"),
        None => eprintln!("error: {err:#}"),
    }
}
