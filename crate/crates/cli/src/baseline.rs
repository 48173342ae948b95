use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::Args;
use epiplan::env::{
    run_episode, BaselineKind, BaselinePolicy, EnvConfig, EnvName, Episode, EpidemicEnv, SummaryStats,
};
use epiplan::ExperimentConfig;

use crate::artifacts::{
    config_hash, create_fresh_dir, timestamp, write_csv, write_json, ArtifactSet, RunKind, RunManifest,
    SeedResult, SeedStatus, MANIFEST_FILE,
};
use crate::train::run_dir_name;
use crate::ConfigArg;

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub env: EnvName,
    /// aggressive, lax or random.
    #[arg(long)]
    pub policy: BaselineKind,
    /// Comma-separated seeds; defaults to the config's run.seeds.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[command(flatten)]
    pub config: ConfigArg,
    /// Parent directory for a run record at <out>/<ENV>-<policy>; nothing is written without it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn baseline_policy(kind: BaselineKind, env: &EnvConfig, config: &ExperimentConfig) -> BaselinePolicy {
    BaselinePolicy::with_params(
        kind,
        env.name.space,
        config.run.baselines.clone(),
        env.episode.population,
        env.interventions.interventions.max_daily_doses,
    )
}

pub fn run(args: BaselineArgs) -> Result<ExitCode> {
    let mut config = args.config.load()?;
    if let Some(seeds) = args.seeds {
        config.run.seeds = seeds;
    }
    if config.run.seeds.is_empty() {
        anyhow::bail!("at least one seed is required");
    }
    config.validate()?;
    let env_config = config.env_config(args.env);
    let mut env = EpidemicEnv::new(env_config.clone())?;
    let mut policy = baseline_policy(args.policy, &env_config, &config);

    let started = timestamp();
    let episodes: Vec<Episode> = config
        .run
        .seeds
        .iter()
        .map(|&s| run_episode(&mut env, &mut policy, s))
        .collect::<epiplan::Result<_>>()?;
    let stats = SummaryStats::from_values(episodes.iter().map(Episode::cumulative_reward).collect())?;

    let label = args.policy.to_string();
    println!("{label} on {}, {} seeds (M$)", args.env, episodes.len());
    for e in &episodes {
        println!("  seed {:>4}: {:>12.3}", e.seed, e.cumulative_reward() / 1e6);
    }
    println!(
        "  max {:.3}  mean {:.3}  std {:.3}",
        stats.max / 1e6,
        stats.mean / 1e6,
        stats.std / 1e6
    );

    if let Some(out) = args.out {
        let dir = out.join(run_dir_name(args.env, &label));
        create_fresh_dir(&dir)?;
        let mut files = ArtifactSet::new(&dir);
        let header: Vec<String> = ["seed", "cumulative_reward", "intervention_cost", "disease_cost"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let rows: Vec<Vec<String>> = episodes
            .iter()
            .map(|e| {
                let l = e.total_ledger();
                vec![
                    e.seed.to_string(),
                    e.cumulative_reward().to_string(),
                    l.intervention_total().to_string(),
                    l.disease_total().to_string(),
                ]
            })
            .collect();
        write_csv(&files.path("returns.csv"), &header, &rows)?;
        write_json(&files.path("summary.json"), &stats)?;
        files.record(MANIFEST_FILE);
        let manifest = RunManifest {
            kind: RunKind::Baseline,
            env: args.env,
            label,
            config_hash: config_hash(&config)?,
            config: config.clone(),
            seeds: config.run.seeds.clone(),
            seed_rule: "episode seed = listed seed; only the Random plan draws from it".into(),
            output_dir: dir.clone(),
            started,
            finished: timestamp(),
            completed: true,
            artifacts: files.into_files(),
            results: episodes
                .iter()
                .map(|e| SeedResult {
                    seed: e.seed,
                    status: SeedStatus::Completed,
                    value: Some(e.cumulative_reward()),
                    greedy_return: None,
                    timesteps: Some(e.steps.len()),
                    error: None,
                })
                .collect(),
        };
        write_json(&dir.join(MANIFEST_FILE), &manifest)?;
        println!("run written to {}", dir.display());
    }
    Ok(ExitCode::SUCCESS)
}
