//! Saved policies and schedule regeneration from them.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::distributions::{DiagGaussian, SquashedGaussian};
use super::sac::{LOG_STD_MAX, LOG_STD_MIN};
use crate::env::{
    run_episode, EnvConfig, EnvName, Episode, EpidemicEnv, NormalizeWrapper, NormalizerState, Policy,
};
use crate::error::{Error, Result};
use crate::nn::Mlp;

pub const CHECKPOINT_FORMAT: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ppo,
    Sac,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Ppo => "PPO",
            Algorithm::Sac => "SAC",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ppo" => Ok(Algorithm::Ppo),
            "sac" => Ok(Algorithm::Sac),
            _ => Err(Error::Config(format!("unknown algorithm `{s}` (expected ppo or sac)"))),
        }
    }
}

/// How actions are drawn when replaying a saved policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleMode {
    /// Draw from the stochastic policy.
    Sampled,
    /// Use the distribution mode.
    Greedy,
}

impl fmt::Display for ScheduleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleMode::Sampled => "sampled",
            ScheduleMode::Greedy => "greedy",
        })
    }
}

impl FromStr for ScheduleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sampled" => Ok(ScheduleMode::Sampled),
            "greedy" => Ok(ScheduleMode::Greedy),
            _ => Err(Error::Config(format!("unknown schedule mode `{s}` (expected sampled or greedy)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PolicyParams {
    Ppo {
        actor: Mlp<f64>,
        log_std: Vec<f64>,
        critic: Mlp<f64>,
    },
    Sac {
        actor: Mlp<f64>,
        q1: Mlp<f64>,
        q2: Mlp<f64>,
    },
}

impl PolicyParams {
    pub fn obs_dim(&self) -> usize {
        match self {
            PolicyParams::Ppo { actor, .. } | PolicyParams::Sac { actor, .. } => actor.input_dim(),
        }
    }

    pub fn action_dim(&self) -> usize {
        match self {
            PolicyParams::Ppo { log_std, .. } => log_std.len(),
            PolicyParams::Sac { actor, .. } => actor.output_dim() / 2,
        }
    }

    /// Action the policy sends to the environment for a normalized observation. PPO
    /// samples are returned raw; the environment clamps them.
    pub fn action(&self, obs: &[f64], mode: ScheduleMode, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        match self {
            PolicyParams::Ppo { actor, log_std, .. } => {
                let mean = actor.forward_one(obs)?;
                let dist = DiagGaussian::new(&mean, log_std)?;
                Ok(match mode {
                    ScheduleMode::Sampled => dist.sample(rng),
                    ScheduleMode::Greedy => dist.mode(),
                })
            }
            PolicyParams::Sac { actor, .. } => {
                let out = actor.forward_one(obs)?;
                let d = out.len() / 2;
                let log_std: Vec<f64> = out[d..].iter().map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX)).collect();
                let dist = SquashedGaussian::new(&out[..d], &log_std)?;
                Ok(match mode {
                    ScheduleMode::Sampled => dist.sample(rng).action,
                    ScheduleMode::Greedy => dist.mode(),
                })
            }
        }
    }
}

/// Trained policy plus the frozen normalizer statistics it was trained with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: u32,
    pub env: EnvName,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub timesteps: usize,
    pub normalizer: NormalizerState,
    pub policy: PolicyParams,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(json)?;
        if c.format != CHECKPOINT_FORMAT {
            return Err(Error::Config(format!(
                "unsupported checkpoint format {} (expected {CHECKPOINT_FORMAT})",
                c.format
            )));
        }
        match &c.policy {
            PolicyParams::Ppo { actor, critic, .. } => {
                actor.validate()?;
                critic.validate()?;
            }
            PolicyParams::Sac { actor, q1, q2 } => {
                actor.validate()?;
                q1.validate()?;
                q2.validate()?;
            }
        }
        if c.normalizer.observation.dim() != c.policy.obs_dim() {
            return Err(Error::shape(
                format!("normalizer of dimension {}", c.policy.obs_dim()),
                c.normalizer.observation.dim(),
            ));
        }
        Ok(c)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Fails unless the policy's observation and action sizes match `env`.
    pub fn check_compatible(&self, env: EnvName) -> Result<()> {
        let obs = env.model.num_compartments();
        let act = env.space.dim();
        if self.policy.obs_dim() != obs || self.policy.action_dim() != act {
            return Err(Error::shape(
                format!("{env} with observation dim {obs} and action dim {act}"),
                format!(
                    "checkpoint for {} with observation dim {} and action dim {}",
                    self.env,
                    self.policy.obs_dim(),
                    self.policy.action_dim()
                ),
            ));
        }
        Ok(())
    }

    pub fn policy(&self, mode: ScheduleMode) -> CheckpointPolicy<'_> {
        CheckpointPolicy {
            params: &self.policy,
            mode,
            rng: ChaCha8Rng::seed_from_u64(0),
            error: None,
        }
    }

    /// One episode of the saved policy in `config`, observed through the frozen
    /// normalizer. `seed` drives sampling in [`ScheduleMode::Sampled`].
    pub fn rollout(&self, config: EnvConfig, mode: ScheduleMode, seed: u64) -> Result<Episode> {
        self.check_compatible(config.name)?;
        let mut env = NormalizeWrapper::frozen(EpidemicEnv::new(config)?, self.normalizer.clone());
        let mut policy = self.policy(mode);
        let episode = run_episode(&mut env, &mut policy, seed)?;
        match policy.error {
            Some(e) => Err(e),
            None => Ok(episode),
        }
    }
}

/// [`Policy`] adapter over saved parameters. The first evaluation error is kept and
/// the midpoint action is used in its place.
pub struct CheckpointPolicy<'a> {
    params: &'a PolicyParams,
    mode: ScheduleMode,
    rng: ChaCha8Rng,
    pub error: Option<Error>,
}

impl Policy for CheckpointPolicy<'_> {
    fn reset(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    fn act(&mut self, observation: &[f64], _day: f64) -> Vec<f64> {
        match self.params.action(observation, self.mode, &mut self.rng) {
            Ok(a) => a,
            Err(e) => {
                self.error.get_or_insert(e);
                vec![0.5; self.params.action_dim()]
            }
        }
    }
}
