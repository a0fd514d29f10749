// Copyright 2026 The jcpulse Authors
// SPDX-License-Identifier: Apache-2.0

//! `jcpulse` command-line driver.

mod artifacts;
mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use artifacts::{Artifacts, ManifestInfo};
use commands::Context;
use config::{parse, read_json, Validate};
use error::CliError;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Simulate,
    CompileAnalytic,
    OptimizeV,
    CompileSa,
    OptimizeCinc,
    ComposeCinc,
    Bounds,
}

#[derive(Debug, Parser)]
#[command(name = "jcpulse", version, about = "Pulse compilation for a qubit coupled to an oscillator")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the configuration's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
}

/// Parse, run and report one command; returns whether thresholds were met.
fn run_typed<T, F>(raw: &serde_json::Value, ctx: &mut Context, out: &mut Artifacts, f: F) -> Result<(bool, serde_json::Value), CliError>
where
    T: DeserializeOwned + Serialize + Validate + HasSeed,
    F: FnOnce(&T, &Context, &mut Artifacts) -> Result<bool, CliError>,
{
    let cfg: T = parse(raw)?;
    ctx.seed = cfg.seed();
    let met = f(&cfg, ctx, out)?;
    let effective = serde_json::to_value(&cfg).map_err(|e| CliError::Output(e.to_string()))?;
    Ok((met, effective))
}

trait HasSeed {
    fn seed(&self) -> u64;
}

macro_rules! has_seed {
    ($($t:ty),*) => {$(impl HasSeed for $t { fn seed(&self) -> u64 { self.seed } })*};
}
has_seed!(
    config::SimulateConfig,
    config::CompileAnalyticConfig,
    config::OptimizeVConfig,
    config::CompileSaConfig,
    config::OptimizeCincConfig,
    config::ComposeCincConfig,
    config::BoundsConfig
);

fn run(cli: &Cli) -> Result<bool, CliError> {
    let start = Instant::now();
    let mut raw = read_json(&cli.config, "<root>")?;
    if let Some(seed) = cli.seed {
        match raw.as_object_mut() {
            Some(obj) => {
                obj.insert("seed".into(), seed.into());
            }
            None => return Err(CliError::config("<root>", "expected a JSON object")),
        }
    }
    let jobs = cli.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(CliError::config("--jobs", "must be at least 1"));
    }
    // Only fails when a pool already exists, which is harmless.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();

    let cache = std::env::var_os("JCPULSE_CACHE").map(|d| PathBuf::from(d).join("vcache.json"));
    let mut ctx = Context {
        seed: 0,
        config_dir: commands::config_dir(&cli.config),
        cache: cache.clone(),
    };
    let mut out = Artifacts::create(&cli.out)?;
    let (met, effective) = match cli.command {
        Command::Simulate => run_typed(&raw, &mut ctx, &mut out, commands::simulate)?,
        Command::CompileAnalytic => run_typed(&raw, &mut ctx, &mut out, commands::compile_analytic_cmd)?,
        Command::OptimizeV => run_typed(&raw, &mut ctx, &mut out, commands::optimize_v_cmd)?,
        Command::CompileSa => run_typed(&raw, &mut ctx, &mut out, commands::compile_sa_cmd)?,
        Command::OptimizeCinc => run_typed(&raw, &mut ctx, &mut out, commands::optimize_cinc_cmd)?,
        Command::ComposeCinc => run_typed(&raw, &mut ctx, &mut out, commands::compose_cinc_cmd)?,
        Command::Bounds => run_typed(&raw, &mut ctx, &mut out, commands::bounds_cmd)?,
    };
    let command = cli.command.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    out.finish(ManifestInfo {
        command,
        config_source: cli.config.display().to_string(),
        config: effective,
        seed: ctx.seed,
        jobs,
        status: if met { "met" } else { "threshold_not_met" }.into(),
        cache: cache.map(|p| p.display().to_string()),
        wall_time_s: start.elapsed().as_secs_f64(),
    })?;
    Ok(met)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("jcpulse: threshold not met; results written to {}", cli.out.display());
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("jcpulse: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
