//! Training loops producing learning curves, best schedules and checkpoints.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::buffers::{ReplayBuffer, Rollout};
use super::checkpoint::{Algorithm, Checkpoint, PolicyParams, ScheduleMode, CHECKPOINT_FORMAT};
use super::ppo::{ppo_update, PpoAgent, PpoConfig, PpoDiagnostics};
use super::sac::{sac_update, SacAgent, SacConfig, SacDiagnostics};
use crate::env::{EnvConfig, EnvName, Environment, Episode, EpidemicEnv, NormalizeWrapper, StepResult};
use crate::error::{Error, Result};
use crate::interventions::CostLedger;

/// ChaCha8 stream carrying network initialization.
pub const INIT_STREAM: u64 = 1;
/// ChaCha8 stream carrying action sampling, minibatch shuffles and replay sampling.
pub const SAMPLING_STREAM: u64 = 2;

pub const SEED_SPLITTING_RULE: &str = "parameter init = ChaCha8(seed = master, stream = 1); \
action sampling, minibatch shuffles and replay sampling = ChaCha8(seed = master, stream = 2); \
episode k is reset with env seed master + k; greedy evaluation uses env seed master";

/// Independent random streams derived from one master seed.
pub struct SeedStreams {
    pub env: u64,
    pub init: ChaCha8Rng,
    pub sampling: ChaCha8Rng,
}

impl SeedStreams {
    pub fn new(master: u64) -> Self {
        let stream = |s| {
            let mut rng = ChaCha8Rng::seed_from_u64(master);
            rng.set_stream(s);
            rng
        };
        Self {
            env: master,
            init: stream(INIT_STREAM),
            sampling: stream(SAMPLING_STREAM),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", content = "config", rename_all = "lowercase")]
pub enum AlgoConfig {
    Ppo(PpoConfig),
    Sac(SacConfig),
}

impl AlgoConfig {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            AlgoConfig::Ppo(_) => Algorithm::Ppo,
            AlgoConfig::Sac(_) => Algorithm::Sac,
        }
    }

    pub fn total_timesteps(&self) -> usize {
        match self {
            AlgoConfig::Ppo(c) => c.total_timesteps,
            AlgoConfig::Sac(c) => c.total_timesteps,
        }
    }

    pub fn with_total_timesteps(mut self, n: usize) -> Self {
        match &mut self {
            AlgoConfig::Ppo(c) => c.total_timesteps = n,
            AlgoConfig::Sac(c) => c.total_timesteps = n,
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AlgoConfig::Ppo(c) => c.validate(),
            AlgoConfig::Sac(c) => c.validate(),
        }
    }
}

/// Optional limits on a run.
#[derive(Clone, Copy, Debug, Default)]
pub struct TrainControl {
    /// Stop collecting experience once this instant has passed.
    pub deadline: Option<Instant>,
}

impl TrainControl {
    fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

/// One completed training episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    /// Environment steps taken when the episode finished.
    pub timestep: usize,
    /// Undiscounted sum of raw rewards.
    pub episode_return: f64,
    pub ledger: CostLedger<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestEpisode {
    pub record: EpisodeRecord,
    /// Applied actions, one vector per week.
    pub schedule: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum UpdateDiagnostics {
    Ppo(PpoDiagnostics),
    Sac(SacDiagnostics),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub env: EnvName,
    pub algorithm: Algorithm,
    pub seed: u64,
    /// Environment steps actually taken.
    pub timesteps: usize,
    /// False when the run stopped at the deadline.
    pub completed: bool,
    pub curve: Vec<EpisodeRecord>,
    /// Highest-return training episode.
    pub best: Option<BestEpisode>,
    /// Deterministic re-evaluation of the final policy.
    pub greedy: Episode,
    pub checkpoint: Checkpoint,
    /// Per update for PPO, averaged per rollout-sized span for SAC.
    pub diagnostics: Vec<UpdateDiagnostics>,
}

impl TrainOutcome {
    pub fn best_return(&self) -> Option<f64> {
        self.best.as_ref().map(|b| b.record.episode_return)
    }

    /// Mean return of episodes finishing within the first `window` steps.
    pub fn early_mean(&self, window: usize) -> Option<f64> {
        mean(self.curve.iter().filter(|r| r.timestep <= window))
    }

    /// Mean return of episodes finishing within the last `window` steps.
    pub fn late_mean(&self, window: usize) -> Option<f64> {
        let start = self.timesteps.saturating_sub(window);
        mean(self.curve.iter().filter(|r| r.timestep > start))
    }
}

fn mean<'a>(records: impl Iterator<Item = &'a EpisodeRecord>) -> Option<f64> {
    let (sum, n) = records.fold((0.0, 0usize), |(s, n), r| (s + r.episode_return, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Accumulates raw rewards, costs and actions of the running episode.
struct EpisodeTracker {
    master_seed: u64,
    episodes: usize,
    current_return: f64,
    current_ledger: CostLedger<f64>,
    current_schedule: Vec<Vec<f64>>,
    curve: Vec<EpisodeRecord>,
    best: Option<BestEpisode>,
}

impl EpisodeTracker {
    fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            episodes: 0,
            current_return: 0.0,
            current_ledger: CostLedger::default(),
            current_schedule: Vec::new(),
            curve: Vec::new(),
            best: None,
        }
    }

    fn env_seed(&self) -> u64 {
        self.master_seed.wrapping_add(self.episodes as u64)
    }

    fn record(&mut self, step: &StepResult, timestep: usize) {
        self.current_return += step.info.raw_reward;
        self.current_ledger.accumulate(&step.info.ledger);
        self.current_schedule.push(step.info.action.to_vec());
        if step.done {
            let record = EpisodeRecord {
                episode: self.episodes,
                timestep,
                episode_return: self.current_return,
                ledger: self.current_ledger,
            };
            let schedule = std::mem::take(&mut self.current_schedule);
            if self.best.as_ref().is_none_or(|b| record.episode_return > b.record.episode_return) {
                self.best = Some(BestEpisode {
                    record: record.clone(),
                    schedule,
                });
            }
            self.curve.push(record);
            self.episodes += 1;
            self.current_return = 0.0;
            self.current_ledger = CostLedger::default();
        }
    }
}

fn check_finite(obs: &[f64], what: &str, timestep: usize) -> Result<()> {
    match obs.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Training(format!(
            "non-finite {what} component {i} at timestep {timestep}"
        ))),
        None => Ok(()),
    }
}

/// Trains one agent on `env` from `seed` with no limits.
pub fn train(env: &EnvConfig, algo: &AlgoConfig, seed: u64) -> Result<TrainOutcome> {
    train_with(env, algo, seed, TrainControl::default())
}

pub fn train_with(env: &EnvConfig, algo: &AlgoConfig, seed: u64, control: TrainControl) -> Result<TrainOutcome> {
    env.validate()?;
    algo.validate()?;
    match algo {
        AlgoConfig::Ppo(c) => train_ppo(env, c, seed, control),
        AlgoConfig::Sac(c) => train_sac(env, c, seed, control),
    }
}

struct LoopResult {
    timesteps: usize,
    completed: bool,
    tracker: EpisodeTracker,
    diagnostics: Vec<UpdateDiagnostics>,
}

fn finish(env_config: &EnvConfig, algorithm: Algorithm, seed: u64, result: LoopResult, checkpoint: Checkpoint) -> Result<TrainOutcome> {
    let greedy = checkpoint.rollout(env_config.clone(), ScheduleMode::Greedy, seed)?;
    Ok(TrainOutcome {
        env: env_config.name,
        algorithm,
        seed,
        timesteps: result.timesteps,
        completed: result.completed,
        curve: result.tracker.curve,
        best: result.tracker.best,
        greedy,
        checkpoint,
        diagnostics: result.diagnostics,
    })
}

fn train_ppo(env_config: &EnvConfig, config: &PpoConfig, seed: u64, control: TrainControl) -> Result<TrainOutcome> {
    let mut streams = SeedStreams::new(seed);
    let mut env = NormalizeWrapper::new(EpidemicEnv::new(env_config.clone())?);
    let mut agent = PpoAgent::new(env.observation_dim(), env.action_dim(), config, &mut streams.init)?;
    let rng = &mut streams.sampling;
    let mut tracker = EpisodeTracker::new(seed);
    let mut diagnostics = Vec::new();
    let mut rollout = Rollout::with_capacity(config.rollout_steps);
    let mut obs = env.reset(tracker.env_seed());
    let mut timestep = 0;
    let mut completed = true;
    for _ in 0..config.iterations() {
        if control.expired() {
            completed = false;
            break;
        }
        rollout.clear();
        for _ in 0..config.rollout_steps {
            let (action, log_prob, value) = agent.act(&obs, rng)?;
            let step = env.step(&action)?;
            timestep += 1;
            check_finite(&step.observation, "observation", timestep)?;
            tracker.record(&step, timestep);
            rollout.push(obs, action, log_prob, value, step.reward, step.done);
            obs = if step.done { env.reset(tracker.env_seed()) } else { step.observation };
        }
        let last_value = agent.value(&obs)?;
        let diag = ppo_update(&mut agent, &rollout, last_value, config, rng)?;
        diagnostics.push(UpdateDiagnostics::Ppo(diag));
    }
    let checkpoint = Checkpoint {
        format: CHECKPOINT_FORMAT,
        env: env_config.name,
        algorithm: Algorithm::Ppo,
        seed,
        timesteps: timestep,
        normalizer: env.state(),
        policy: PolicyParams::Ppo {
            actor: agent.actor,
            log_std: agent.log_std,
            critic: agent.critic,
        },
    };
    let result = LoopResult {
        timesteps: timestep,
        completed,
        tracker,
        diagnostics,
    };
    finish(env_config, Algorithm::Ppo, seed, result, checkpoint)
}

/// Diagnostics averaged over every this many SAC updates.
const SAC_DIAGNOSTIC_SPAN: usize = 400;

fn train_sac(env_config: &EnvConfig, config: &SacConfig, seed: u64, control: TrainControl) -> Result<TrainOutcome> {
    let mut streams = SeedStreams::new(seed);
    let mut env = NormalizeWrapper::new(EpidemicEnv::new(env_config.clone())?);
    let (obs_dim, action_dim) = (env.observation_dim(), env.action_dim());
    let mut agent = SacAgent::new(obs_dim, action_dim, config, &mut streams.init)?;
    let rng = &mut streams.sampling;
    let capacity = config.buffer_capacity.min(config.total_timesteps.max(1));
    let mut buffer = ReplayBuffer::new(capacity, obs_dim, action_dim)?;
    let mut tracker = EpisodeTracker::new(seed);
    let mut diagnostics = Vec::new();
    let mut pending: Vec<SacDiagnostics> = Vec::new();
    let mut obs = env.reset(tracker.env_seed());
    let mut timestep = 0;
    let mut completed = true;
    while timestep < config.total_timesteps {
        if timestep % 64 == 0 && control.expired() {
            completed = false;
            break;
        }
        let squashed: Vec<f64> = if timestep < config.learning_starts {
            (0..action_dim).map(|_| rng.random_range(-1.0..1.0)).collect()
        } else {
            agent.act(&obs, rng)?.squashed
        };
        let action: Vec<f64> = squashed.iter().map(|&t| super::distributions::to_unit_interval(t)).collect();
        let step = env.step(&action)?;
        timestep += 1;
        check_finite(&step.observation, "observation", timestep)?;
        tracker.record(&step, timestep);
        buffer.push(&obs, &squashed, config.reward_scale * step.reward, &step.observation, step.done)?;
        obs = if step.done { env.reset(tracker.env_seed()) } else { step.observation };
        if timestep >= config.learning_starts && timestep % config.train_freq == 0 {
            for _ in 0..config.gradient_steps {
                let batch = buffer.sample(config.batch_size, rng)?;
                pending.push(sac_update(&mut agent, &batch, config, rng)?);
            }
            if pending.len() >= SAC_DIAGNOSTIC_SPAN {
                diagnostics.push(UpdateDiagnostics::Sac(average(&pending)));
                pending.clear();
            }
        }
    }
    if !pending.is_empty() {
        diagnostics.push(UpdateDiagnostics::Sac(average(&pending)));
    }
    let checkpoint = Checkpoint {
        format: CHECKPOINT_FORMAT,
        env: env_config.name,
        algorithm: Algorithm::Sac,
        seed,
        timesteps: timestep,
        normalizer: env.state(),
        policy: PolicyParams::Sac {
            actor: agent.actor,
            q1: agent.q1,
            q2: agent.q2,
        },
    };
    let result = LoopResult {
        timesteps: timestep,
        completed,
        tracker,
        diagnostics,
    };
    finish(env_config, Algorithm::Sac, seed, result, checkpoint)
}

fn average(d: &[SacDiagnostics]) -> SacDiagnostics {
    let n = d.len() as f64;
    let mut out = SacDiagnostics::default();
    for x in d {
        out.critic_loss += x.critic_loss / n;
        out.actor_loss += x.actor_loss / n;
        out.mean_q += x.mean_q / n;
        out.mean_log_prob += x.mean_log_prob / n;
        out.mean_target += x.mean_target / n;
    }
    out
}
