//! Soft actor-critic with twin critics, target networks and a fixed entropy weight.

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::buffers::Batch;
use super::distributions::{SquashedGaussian, SquashedSample, SQUASH_EPSILON};
use crate::error::{Error, Result};
use crate::nn::{Activation, AdamConfig, AdamState, Mlp};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SacConfig {
    /// Multiplies normalized rewards before they enter the replay buffer.
    pub reward_scale: f64,
    pub lr: f64,
    /// Environment steps between gradient phases.
    pub train_freq: usize,
    /// Steps of uniformly random actions before training starts.
    pub learning_starts: usize,
    pub batch_size: usize,
    pub tau: f64,
    pub gamma: f64,
    pub buffer_capacity: usize,
    pub gradient_steps: usize,
    /// Fixed entropy coefficient.
    pub alpha: f64,
    pub total_timesteps: usize,
    pub hidden: Vec<usize>,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            reward_scale: 100.0,
            lr: 3e-4,
            train_freq: 5,
            learning_starts: 1000,
            batch_size: 256,
            tau: 0.005,
            gamma: 0.99,
            buffer_capacity: 1_000_000,
            gradient_steps: 1,
            alpha: 1.0,
            total_timesteps: 30_000,
            hidden: vec![256, 256],
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("sac {msg}")));
        if self.train_freq == 0 || self.batch_size == 0 || self.buffer_capacity == 0 {
            return bad("train_freq, batch_size and buffer_capacity must be positive");
        }
        if !(0.0..=1.0).contains(&self.tau) || !(0.0..=1.0).contains(&self.gamma) {
            return bad("tau and gamma must lie in [0, 1]");
        }
        if !(self.lr >= 0.0) || !(self.alpha >= 0.0) || !self.reward_scale.is_finite() {
            return bad("lr and alpha must be >= 0 and reward_scale finite");
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden sizes must be positive");
        }
        Ok(())
    }
}

/// Squashed Gaussian actor, twin critics on (observation, squashed action) and their
/// target copies. Critics see actions in [-1, 1].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SacAgent {
    pub actor: Mlp<f64>,
    pub q1: Mlp<f64>,
    pub q2: Mlp<f64>,
    pub q1_target: Mlp<f64>,
    pub q2_target: Mlp<f64>,
    pub actor_optimizer: AdamState<f64>,
    pub critic_optimizer: AdamState<f64>,
}

fn sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    std::iter::once(input).chain(hidden.iter().copied()).chain([output]).collect()
}

/// Actor head evaluated on a batch.
struct PolicyHead {
    mean: Array2<f64>,
    log_std: Array2<f64>,
    /// Raw log std lay inside the clamp range, so gradients pass through.
    log_std_active: Array2<bool>,
}

impl PolicyHead {
    fn from_output(out: &Array2<f64>, d: usize) -> Self {
        let mean = out.slice(s![.., ..d]).to_owned();
        let raw = out.slice(s![.., d..]);
        let log_std = raw.mapv(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX));
        let log_std_active = raw.mapv(|v| (LOG_STD_MIN..=LOG_STD_MAX).contains(&v));
        Self {
            mean,
            log_std,
            log_std_active,
        }
    }
}

/// Reparameterized batch sample. Log-probabilities include the squash and rescale terms.
struct BatchSample {
    noise: Array2<f64>,
    squashed: Array2<f64>,
    log_probs: Vec<f64>,
}

fn sample_batch<R: Rng + ?Sized>(head: &PolicyHead, rng: &mut R) -> BatchSample {
    let (b, d) = head.mean.dim();
    let noise = Array2::from_shape_fn((b, d), |_| rng.sample::<f64, _>(StandardNormal));
    let mut squashed = Array2::zeros((b, d));
    let mut log_probs = vec![d as f64 * (std::f64::consts::LN_2 - HALF_LN_2PI); b];
    for i in 0..b {
        for j in 0..d {
            let e = noise[[i, j]];
            let ls = head.log_std[[i, j]];
            let t = (head.mean[[i, j]] + ls.exp() * e).tanh();
            squashed[[i, j]] = t;
            log_probs[i] += -0.5 * e * e - ls - (1.0 - t * t + SQUASH_EPSILON).ln();
        }
    }
    BatchSample {
        noise,
        squashed,
        log_probs,
    }
}

fn critic_input(obs: ArrayView2<f64>, actions: ArrayView2<f64>) -> Array2<f64> {
    concatenate(Axis(1), &[obs, actions]).expect("matching batch sizes")
}

fn column(x: &Array2<f64>) -> Vec<f64> {
    x.column(0).to_vec()
}

impl SacAgent {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, action_dim: usize, config: &SacConfig, rng: &mut R) -> Result<Self> {
        let actor = Mlp::fan_in_uniform(&sizes(obs_dim, &config.hidden, 2 * action_dim), Activation::Relu, rng)?;
        let critic_sizes = sizes(obs_dim + action_dim, &config.hidden, 1);
        let q1 = Mlp::fan_in_uniform(&critic_sizes, Activation::Relu, rng)?;
        let q2 = Mlp::fan_in_uniform(&critic_sizes, Activation::Relu, rng)?;
        let adam = AdamConfig::with_lr(config.lr);
        let actor_optimizer = AdamState::for_params(adam, &actor.param_slices());
        let mut critic_params = q1.param_slices();
        critic_params.extend(q2.param_slices());
        let critic_optimizer = AdamState::for_params(adam, &critic_params);
        Ok(Self {
            q1_target: q1.clone(),
            q2_target: q2.clone(),
            actor,
            q1,
            q2,
            actor_optimizer,
            critic_optimizer,
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.actor.output_dim() / 2
    }

    fn head(&self, obs: ArrayView2<f64>) -> Result<PolicyHead> {
        Ok(PolicyHead::from_output(&self.actor.forward(obs)?, self.action_dim()))
    }

    /// Mean and clamped log std of the pre-squash Gaussian for one observation.
    pub fn distribution_params(&self, obs: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let out = self.actor.forward_one(obs)?;
        let d = self.action_dim();
        let log_std = out[d..].iter().map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX)).collect();
        Ok((out[..d].to_vec(), log_std))
    }

    pub fn act<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<SquashedSample> {
        let (mean, log_std) = self.distribution_params(obs)?;
        Ok(SquashedGaussian::new(&mean, &log_std)?.sample(rng))
    }

    /// Deterministic action in [0, 1].
    pub fn greedy(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let (mean, log_std) = self.distribution_params(obs)?;
        Ok(SquashedGaussian::new(&mean, &log_std)?.mode())
    }

    /// Soft Bellman targets `r + gamma (1 - done) (min Q'(s', a') - alpha log pi(a'|s'))`
    /// with `a'` drawn from the current actor.
    pub fn targets<R: Rng + ?Sized>(&self, batch: &Batch, config: &SacConfig, rng: &mut R) -> Result<Vec<f64>> {
        let head = self.head(batch.next_observations.view())?;
        let next = sample_batch(&head, rng);
        let input = critic_input(batch.next_observations.view(), next.squashed.view());
        let q1 = self.q1_target.forward(input.view())?;
        let q2 = self.q2_target.forward(input.view())?;
        let targets: Vec<f64> = (0..batch.len())
            .map(|i| {
                if batch.dones[i] {
                    batch.rewards[i]
                } else {
                    let soft = q1[[i, 0]].min(q2[[i, 0]]) - config.alpha * next.log_probs[i];
                    batch.rewards[i] + config.gamma * soft
                }
            })
            .collect();
        if let Some(i) = targets.iter().position(|y| !y.is_finite()) {
            return Err(Error::Training(format!(
                "non-finite SAC target for sample {i}: reward {}, log prob {}",
                batch.rewards[i], next.log_probs[i]
            )));
        }
        Ok(targets)
    }

    /// `target <- tau * online + (1 - tau) * target` for both critics.
    pub fn soft_update_targets(&mut self, tau: f64) -> Result<()> {
        self.q1_target.polyak_from(&self.q1, tau)?;
        self.q2_target.polyak_from(&self.q2, tau)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SacDiagnostics {
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub mean_q: f64,
    pub mean_log_prob: f64,
    pub mean_target: f64,
}

/// One gradient step on the critics, then the actor, then the Polyak update.
pub fn sac_update<R: Rng + ?Sized>(
    agent: &mut SacAgent,
    batch: &Batch,
    config: &SacConfig,
    rng: &mut R,
) -> Result<SacDiagnostics> {
    let b = batch.len();
    let d = agent.action_dim();
    if b == 0 || batch.actions.ncols() != d || batch.observations.ncols() != agent.obs_dim() {
        return Err(Error::shape(
            format!("non-empty batch with {} obs and {d} action dims", agent.obs_dim()),
            format!("{b} samples, {:?} actions", batch.actions.dim()),
        ));
    }
    let bn = b as f64;
    let targets = agent.targets(batch, config, rng)?;

    let input = critic_input(batch.observations.view(), batch.actions.view());
    let c1 = agent.q1.forward_cached(input.view())?;
    let c2 = agent.q2.forward_cached(input.view())?;
    let (q1, q2) = (column(c1.output()), column(c2.output()));
    let mut g1 = Array2::zeros((b, 1));
    let mut g2 = Array2::zeros((b, 1));
    let mut critic_loss = 0.0;
    for i in 0..b {
        let (e1, e2) = (q1[i] - targets[i], q2[i] - targets[i]);
        critic_loss += 0.5 * (e1 * e1 + e2 * e2) / bn;
        g1[[i, 0]] = e1 / bn;
        g2[[i, 0]] = e2 / bn;
    }
    if !critic_loss.is_finite() {
        return Err(Error::Training(format!("non-finite SAC critic loss {critic_loss}")));
    }
    let (grads1, _) = agent.q1.backward(&c1, g1.view())?;
    let (grads2, _) = agent.q2.backward(&c2, g2.view())?;
    {
        let SacAgent {
            q1,
            q2,
            critic_optimizer,
            ..
        } = agent;
        let mut params = q1.param_slices_mut();
        params.extend(q2.param_slices_mut());
        let mut grads = grads1.slices();
        grads.extend(grads2.slices());
        critic_optimizer.apply(&mut params, &grads)?;
    }

    let actor_cache = agent.actor.forward_cached(batch.observations.view())?;
    let head = PolicyHead::from_output(actor_cache.output(), d);
    let pi = sample_batch(&head, rng);
    let input = critic_input(batch.observations.view(), pi.squashed.view());
    let a1 = agent.q1.forward_cached(input.view())?;
    let a2 = agent.q2.forward_cached(input.view())?;
    let (qa1, qa2) = (column(a1.output()), column(a2.output()));
    let mut sel1 = Array2::zeros((b, 1));
    let mut sel2 = Array2::zeros((b, 1));
    let mut actor_loss = 0.0;
    let mut mean_q = 0.0;
    for i in 0..b {
        let q = qa1[i].min(qa2[i]);
        if qa1[i] <= qa2[i] {
            sel1[[i, 0]] = 1.0;
        } else {
            sel2[[i, 0]] = 1.0;
        }
        actor_loss += (config.alpha * pi.log_probs[i] - q) / bn;
        mean_q += q / bn;
    }
    if !actor_loss.is_finite() {
        return Err(Error::Training(format!("non-finite SAC actor loss {actor_loss}")));
    }
    let dq = agent.q1.backward_input(&a1, sel1.view())? + agent.q2.backward_input(&a2, sel2.view())?;
    let obs_dim = agent.obs_dim();
    let mut grad_out = Array2::zeros((b, 2 * d));
    for i in 0..b {
        for j in 0..d {
            let t = pi.squashed[[i, j]];
            let one_t2 = 1.0 - t * t;
            let jac = 2.0 * t * one_t2 / (one_t2 + SQUASH_EPSILON);
            let g_pre = (config.alpha * jac - dq[[i, obs_dim + j]] * one_t2) / bn;
            grad_out[[i, j]] = g_pre;
            if head.log_std_active[[i, j]] {
                let sigma = head.log_std[[i, j]].exp();
                grad_out[[i, d + j]] = g_pre * sigma * pi.noise[[i, j]] - config.alpha / bn;
            }
        }
    }
    let (actor_grads, _) = agent.actor.backward(&actor_cache, grad_out.view())?;
    {
        let SacAgent {
            actor,
            actor_optimizer,
            ..
        } = agent;
        actor_optimizer.apply(&mut actor.param_slices_mut(), &actor_grads.slices())?;
    }
    agent.soft_update_targets(config.tau)?;

    Ok(SacDiagnostics {
        critic_loss,
        actor_loss,
        mean_q,
        mean_log_prob: pi.log_probs.iter().sum::<f64>() / bn,
        mean_target: targets.iter().sum::<f64>() / bn,
    })
}
