use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use anyhow::{bail, Result};
use clap::Args;
use epiplan::env::{EnvConfig, EnvName};
use epiplan::rl::{train_with, AlgoConfig, EpisodeRecord, TrainControl, TrainOutcome, SEED_SPLITTING_RULE};
use epiplan::Algorithm;
use serde::Serialize;

use crate::artifacts::{
    config_hash, create_fresh_dir, timestamp, write_csv, write_json, ArtifactSet, RunKind, RunManifest,
    write_new, SeedResult, SeedStatus, MANIFEST_FILE,
};
use crate::schedule::ScheduleDoc;
use crate::{parse_positive_f64, ConfigArg};

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Environment name, e.g. SIR-A.
    #[arg(long)]
    pub env: EnvName,
    /// ppo or sac.
    #[arg(long)]
    pub algo: Algorithm,
    /// Comma-separated master seeds; defaults to the config's run.seeds.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Environment steps per seed; overrides the algorithm's total_timesteps.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub timesteps: Option<u64>,
    #[command(flatten)]
    pub config: ConfigArg,
    /// Parent directory; the run goes to <out>/<ENV>-<algo>.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    /// Wall-clock budget for the whole command.
    #[arg(long, value_parser = parse_positive_f64)]
    pub max_hours: Option<f64>,
    /// Seeds trained concurrently; defaults to the available cores.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,
}

pub fn run_dir_name(env: EnvName, label: &str) -> String {
    format!("{env}-{}", label.to_ascii_lowercase())
}

pub fn run(args: TrainArgs) -> Result<ExitCode> {
    let mut config = args.config.load()?;
    if let Some(seeds) = args.seeds {
        config.run.seeds = seeds;
    }
    if let Some(t) = args.timesteps {
        config.ppo.total_timesteps = t as usize;
        config.sac.total_timesteps = t as usize;
    }
    check_seeds(&config.run.seeds)?;
    config.validate()?;

    let env = config.env_config(args.env);
    let algo = config.algo_config(args.algo);
    let label = args.algo.to_string();
    let run_dir = args.out.join(run_dir_name(args.env, &label));
    create_fresh_dir(&run_dir)?;

    let started = timestamp();
    let deadline = args
        .max_hours
        .map(|h| Instant::now() + Duration::from_secs_f64(h * 3600.0));
    let jobs = args
        .jobs
        .map(|j| j as usize)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));

    let seeds = config.run.seeds.clone();
    let outputs = in_parallel(&seeds, jobs, |seed| train_seed(&run_dir, &env, &algo, seed, deadline));

    let mut artifacts = Vec::new();
    let mut results = Vec::new();
    for (result, files) in outputs {
        artifacts.extend(files);
        results.push(result);
    }
    artifacts.push(MANIFEST_FILE.to_string());
    let completed = results.iter().all(|r| r.status == SeedStatus::Completed);
    let failed = results.iter().any(|r| r.status == SeedStatus::Failed);

    let manifest = RunManifest {
        kind: RunKind::Train,
        env: args.env,
        label: label.clone(),
        config_hash: config_hash(&config)?,
        config: config.clone(),
        seeds,
        seed_rule: SEED_SPLITTING_RULE.to_string(),
        output_dir: run_dir.clone(),
        started,
        finished: timestamp(),
        completed,
        artifacts,
        results,
    };
    write_json(&run_dir.join(MANIFEST_FILE), &manifest)?;

    for r in &manifest.results {
        match r.status {
            SeedStatus::Failed => eprintln!(
                "seed {}: failed: {}",
                r.seed,
                r.error.as_deref().unwrap_or("unknown error")
            ),
            SeedStatus::Skipped => eprintln!("seed {}: skipped, wall-clock budget exhausted", r.seed),
            status => println!(
                "{} {} seed {}: best {:.3} M$, greedy {:.3} M$, {} steps{}",
                args.env,
                label,
                r.seed,
                r.value.unwrap_or(f64::NAN) / 1e6,
                r.greedy_return.unwrap_or(f64::NAN) / 1e6,
                r.timesteps.unwrap_or(0),
                if status == SeedStatus::Partial { " (stopped at deadline)" } else { "" }
            ),
        }
    }
    println!("run written to {}", run_dir.display());
    Ok(if failed { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

fn check_seeds(seeds: &[u64]) -> Result<()> {
    if seeds.is_empty() {
        bail!("at least one seed is required");
    }
    let mut sorted = seeds.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        bail!("seed {} is listed twice", w[0]);
    }
    Ok(())
}

/// Applies `f` to every seed on up to `jobs` threads, keeping input order.
fn in_parallel<T: Send>(seeds: &[u64], jobs: usize, f: impl Fn(u64) -> T + Sync) -> Vec<T> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<T>>> = seeds.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, seeds.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= seeds.len() {
                    break;
                }
                let out = f(seeds[i]);
                *slots[i].lock().expect("worker panicked") = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("worker panicked").expect("seed not processed"))
        .collect()
}

pub fn seed_dir_name(seed: u64) -> String {
    format!("seed-{seed}")
}

#[derive(Serialize)]
struct ErrorArtifact<'a> {
    env: EnvName,
    algorithm: Algorithm,
    seed: u64,
    error: String,
    config: &'a AlgoConfig,
    time: String,
}

fn train_seed(
    run_dir: &Path,
    env: &EnvConfig,
    algo: &AlgoConfig,
    seed: u64,
    deadline: Option<Instant>,
) -> (SeedResult, Vec<String>) {
    if deadline.is_some_and(|d| Instant::now() >= d) {
        return (SeedResult::skipped(seed), Vec::new());
    }
    let seed_dir = seed_dir_name(seed);
    let dir = run_dir.join(&seed_dir);
    let mut files = ArtifactSet::new(run_dir);
    let outcome = std::fs::create_dir(&dir)
        .map_err(anyhow::Error::from)
        .and_then(|_| Ok(train_with(env, algo, seed, TrainControl { deadline })?));
    let result = match outcome.and_then(|o| write_outcome(&o, env, &seed_dir, &mut files).map(|_| o)) {
        Ok(o) => SeedResult {
            seed,
            status: if o.completed { SeedStatus::Completed } else { SeedStatus::Partial },
            value: o.best_return(),
            greedy_return: Some(o.greedy.cumulative_reward()),
            timesteps: Some(o.timesteps),
            error: None,
        },
        Err(e) => {
            let artifact = ErrorArtifact {
                env: env.name,
                algorithm: algo.algorithm(),
                seed,
                error: format!("{e:#}"),
                config: algo,
                time: timestamp(),
            };
            let path = files.path(format!("{seed_dir}/error.json"));
            if let Err(w) = write_json(&path, &artifact) {
                eprintln!("seed {seed}: could not write error artifact: {w:#}");
            }
            SeedResult {
                seed,
                status: SeedStatus::Failed,
                value: None,
                greedy_return: None,
                timesteps: None,
                error: Some(format!("{e:#}")),
            }
        }
    };
    (result, files.into_files())
}

pub fn curve_header() -> Vec<String> {
    [
        "episode",
        "timestep",
        "episode_return",
        "cost_mask",
        "cost_vaccine",
        "cost_school",
        "cost_workplace",
        "cost_infections",
        "cost_hospitalizations",
        "cost_deaths",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn curve_row(r: &EpisodeRecord) -> Vec<String> {
    let (i, d) = (&r.ledger.interventions, &r.ledger.disease);
    let mut row = vec![r.episode.to_string(), r.timestep.to_string()];
    row.extend(
        [
            r.episode_return,
            i.mask,
            i.vaccine,
            i.school,
            i.workplace,
            d.infections,
            d.hospitalizations,
            d.deaths,
        ]
        .iter()
        .map(|v| v.to_string()),
    );
    row
}

fn write_outcome(o: &TrainOutcome, env: &EnvConfig, seed_dir: &str, files: &mut ArtifactSet) -> Result<()> {
    let rows: Vec<_> = o.curve.iter().map(curve_row).collect();
    write_csv(&files.path(format!("{seed_dir}/curve.csv")), &curve_header(), &rows)?;

    let algorithm = o.algorithm.to_string();
    let mut schedules = Vec::new();
    if let Some(best) = &o.best {
        schedules.push((
            "best_schedule",
            ScheduleDoc::from_actions(
                env,
                &algorithm,
                "best-sampled",
                o.seed,
                best.record.episode_return,
                &best.schedule,
            ),
        ));
    }
    schedules.push(("greedy_schedule", ScheduleDoc::from_episode(env, &algorithm, "greedy", &o.greedy)));
    let dir = files.root().join(seed_dir);
    for (stem, doc) in schedules {
        for name in doc.write(&dir, stem)? {
            files.record(format!("{seed_dir}/{name}"));
        }
    }

    let ckpt = files.path(format!("{seed_dir}/checkpoint.json"));
    write_new(&ckpt, o.checkpoint.to_json()?.as_bytes())?;
    write_json(&files.path(format!("{seed_dir}/diagnostics.json")), &o.diagnostics)?;
    Ok(())
}
