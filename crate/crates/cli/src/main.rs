//! `epiplan`: train agents, evaluate baselines, compare runs and export schedules.

mod artifacts;
mod baseline;
mod compare;
mod export;
mod schedule;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use epiplan::env::EnvName;
use epiplan::ExperimentConfig;

#[derive(Debug, Parser)]
#[command(name = "epiplan", version, about = "Epidemic intervention planning with reinforcement learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one agent per seed and write curves, schedules, checkpoints and a manifest.
    Train(train::TrainArgs),
    /// Evaluate a fixed plan across seeds.
    Baseline(baseline::BaselineArgs),
    /// Tabulate the runs found under a directory.
    Compare(compare::CompareArgs),
    /// Replay a checkpoint and write its weekly schedule.
    ExportSchedule(export::ExportArgs),
    /// List the available environments.
    ListEnvs,
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// JSON config document; unset fields keep their defaults.
    #[arg(long, env = "EPIPLAN_CONFIG")]
    pub config: Option<PathBuf>,
}

impl ConfigArg {
    pub fn load(&self) -> Result<ExperimentConfig> {
        Ok(match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        })
    }
}

pub fn parse_positive_f64(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

fn list_envs() -> Result<ExitCode> {
    println!("{:<8} {:>7} {:>10}  {:<8} compartments", "name", "obs dim", "action dim", "actions");
    for e in EnvName::ALL {
        println!(
            "{:<8} {:>7} {:>10}  {:<8} {}",
            e.to_string(),
            e.model.num_compartments(),
            e.space.dim(),
            e.space.labels().join(","),
            e.model.compartment_names().join(",")
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => train::run(a),
        Command::Baseline(a) => baseline::run(a),
        Command::Compare(a) => compare::run(a),
        Command::ExportSchedule(a) => export::run(a),
        Command::ListEnvs => list_envs(),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
