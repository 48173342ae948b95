use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;
use epiplan::env::EnvName;
use epiplan::{Checkpoint, ScheduleMode};

use crate::schedule::ScheduleDoc;
use crate::ConfigArg;

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub env: EnvName,
    /// sampled or greedy.
    #[arg(long, default_value = "greedy")]
    pub mode: ScheduleMode,
    /// Sampling seed for sampled mode; defaults to the checkpoint's training seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub config: ConfigArg,
    /// Directory for schedule-<ENV>-<mode>.json and .csv; existing files are not replaced.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

pub fn run(args: ExportArgs) -> Result<ExitCode> {
    let config = args.config.load()?;
    let ckpt = Checkpoint::load(&args.checkpoint)
        .with_context(|| format!("cannot load checkpoint {}", args.checkpoint.display()))?;
    ckpt.check_compatible(args.env)?;
    let env = config.env_config(args.env);
    let seed = args.seed.unwrap_or(ckpt.seed);
    let episode = ckpt.rollout(env.clone(), args.mode, seed)?;
    let doc = ScheduleDoc::from_episode(&env, &ckpt.algorithm.to_string(), &args.mode.to_string(), &episode);
    std::fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    let names = doc.write(&args.out, &format!("schedule-{}-{}", args.env, args.mode))?;
    println!(
        "{} {} schedule on {}: cumulative reward {:.3} M$",
        ckpt.algorithm,
        args.mode,
        args.env,
        doc.cumulative_reward / 1e6
    );
    for n in names {
        println!("wrote {}", args.out.join(n).display());
    }
    Ok(ExitCode::SUCCESS)
}
