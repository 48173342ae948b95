//! Proximal policy optimization with a clipped surrogate and GAE.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::buffers::{gather_rows, Rollout};
use super::distributions::DiagGaussian;
use super::gae::compute_gae;
use crate::error::{Error, Result};
use crate::nn::{clip_global_norm, Activation, AdamConfig, AdamState, Gradients, Mlp};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub lr: f64,
    pub rollout_steps: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub minibatches: usize,
    pub update_epochs: usize,
    pub clip_coef: f64,
    pub ent_coef: f64,
    pub vf_coef: f64,
    pub max_grad_norm: f64,
    pub total_timesteps: usize,
    pub hidden: Vec<usize>,
    pub normalize_advantages: bool,
    pub adam_eps: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            lr: 3e-4,
            rollout_steps: 2048,
            gamma: 0.99,
            gae_lambda: 0.95,
            minibatches: 32,
            update_epochs: 10,
            clip_coef: 0.2,
            ent_coef: 0.0,
            vf_coef: 0.5,
            max_grad_norm: 0.5,
            total_timesteps: 30_000,
            hidden: vec![64, 64],
            normalize_advantages: true,
            adam_eps: 1e-8,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.rollout_steps == 0 || self.minibatches == 0 || self.update_epochs == 0 {
            return bad("ppo rollout_steps, minibatches and update_epochs must be positive".into());
        }
        if !self.rollout_steps.is_multiple_of(self.minibatches) {
            return bad(format!(
                "ppo rollout_steps {} is not divisible by minibatches {}",
                self.rollout_steps, self.minibatches
            ));
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("ppo gamma and gae_lambda must lie in [0, 1]".into());
        }
        if !(self.lr >= 0.0) || !(self.clip_coef > 0.0) || !(self.max_grad_norm > 0.0) {
            return bad("ppo lr must be >= 0, clip_coef and max_grad_norm > 0".into());
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad(format!("ppo hidden sizes must be positive, got {:?}", self.hidden));
        }
        Ok(())
    }

    /// Number of rollout/update iterations needed to cover `total_timesteps`.
    pub fn iterations(&self) -> usize {
        self.total_timesteps.div_ceil(self.rollout_steps)
    }

    pub fn minibatch_size(&self) -> usize {
        self.rollout_steps / self.minibatches
    }
}

/// Gaussian actor with state-independent log std, and a value critic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpoAgent {
    pub actor: Mlp<f64>,
    pub log_std: Vec<f64>,
    pub critic: Mlp<f64>,
    pub optimizer: AdamState<f64>,
}

fn layer_sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    std::iter::once(input).chain(hidden.iter().copied()).chain([output]).collect()
}

impl PpoAgent {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, action_dim: usize, config: &PpoConfig, rng: &mut R) -> Result<Self> {
        let sqrt2 = std::f64::consts::SQRT_2;
        let actor = Mlp::orthogonal(
            &layer_sizes(obs_dim, &config.hidden, action_dim),
            Activation::Tanh,
            sqrt2,
            0.01,
            rng,
        )?;
        let critic = Mlp::orthogonal(&layer_sizes(obs_dim, &config.hidden, 1), Activation::Tanh, sqrt2, 1.0, rng)?;
        let log_std = vec![0.0; action_dim];
        let mut agent = Self {
            actor,
            log_std,
            critic,
            optimizer: AdamState::new(AdamConfig::default(), &[]),
        };
        let adam = AdamConfig {
            lr: config.lr,
            eps: config.adam_eps,
            ..AdamConfig::default()
        };
        let sizes: Vec<usize> = agent.param_slices_mut().iter().map(|s| s.len()).collect();
        agent.optimizer = AdamState::new(adam, &sizes);
        Ok(agent)
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    /// Actor parameters, then log std, then critic parameters.
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = self.actor.param_slices_mut();
        out.push(self.log_std.as_mut_slice());
        out.extend(self.critic.param_slices_mut());
        out
    }

    pub fn apply_gradients(&mut self, grads: &[&[f64]]) -> Result<()> {
        let PpoAgent {
            actor,
            log_std,
            critic,
            optimizer,
        } = self;
        let mut params = actor.param_slices_mut();
        params.push(log_std.as_mut_slice());
        params.extend(critic.param_slices_mut());
        optimizer.apply(&mut params, grads)
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.critic.forward_one(obs)?[0])
    }

    pub fn mean_action(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.actor.forward_one(obs)
    }

    /// Samples an unclamped action; returns action, its log-probability and the value
    /// estimate.
    pub fn act<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<(Vec<f64>, f64, f64)> {
        let mean = self.mean_action(obs)?;
        let dist = DiagGaussian::new(&mean, &self.log_std)?;
        let action = dist.sample(rng);
        let log_prob = dist.log_prob(&action);
        Ok((action, log_prob, self.value(obs)?))
    }

    pub fn log_prob(&self, obs: &[f64], action: &[f64]) -> Result<f64> {
        let mean = self.mean_action(obs)?;
        Ok(DiagGaussian::new(&mean, &self.log_std)?.log_prob(action))
    }
}

/// `-mean(min(r A, clip(r, 1-c, 1+c) A))` and its derivative with respect to each ratio.
pub fn clipped_surrogate(ratios: &[f64], advantages: &[f64], clip: f64) -> (f64, Vec<f64>) {
    let n = ratios.len() as f64;
    let mut loss = 0.0;
    let grads = ratios
        .iter()
        .zip(advantages)
        .map(|(&r, &a)| {
            let clipped = r.clamp(1.0 - clip, 1.0 + clip);
            let (unclipped_obj, clipped_obj) = (r * a, clipped * a);
            loss -= unclipped_obj.min(clipped_obj) / n;
            if unclipped_obj <= clipped_obj {
                -a / n
            } else {
                0.0
            }
        })
        .collect();
    (loss, grads)
}

/// Shifts and scales to zero mean and unit sample standard deviation.
pub fn normalize_advantages(adv: &mut [f64]) {
    let n = adv.len();
    if n < 2 {
        return;
    }
    let mean = adv.iter().sum::<f64>() / n as f64;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let scale = var.sqrt() + 1e-8;
    for a in adv.iter_mut() {
        *a = (*a - mean) / scale;
    }
}

/// Losses and gradients of one minibatch.
#[derive(Clone, Debug)]
pub struct MinibatchOutput {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub ratios: Vec<f64>,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub actor_grads: Gradients<f64>,
    pub log_std_grads: Vec<f64>,
    pub critic_grads: Gradients<f64>,
}

impl MinibatchOutput {
    pub fn total_loss(&self, config: &PpoConfig) -> f64 {
        self.policy_loss - config.ent_coef * self.entropy + config.vf_coef * self.value_loss
    }

    fn grad_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = self.actor_grads.slices_mut();
        out.push(self.log_std_grads.as_mut_slice());
        out.extend(self.critic_grads.slices_mut());
        out
    }
}

/// Loss `policy - ent_coef * entropy + vf_coef * 0.5 * mean((V - returns)^2)` and its
/// gradients. `advantages` are used as given.
pub fn minibatch_loss(
    agent: &PpoAgent,
    observations: &Array2<f64>,
    actions: &Array2<f64>,
    old_log_probs: &[f64],
    advantages: &[f64],
    returns: &[f64],
    config: &PpoConfig,
) -> Result<MinibatchOutput> {
    let b = observations.nrows();
    let d = agent.action_dim();
    if actions.dim() != (b, d) || old_log_probs.len() != b || advantages.len() != b || returns.len() != b {
        return Err(Error::shape(
            format!("minibatch of {b} samples with {d} action dims"),
            format!("actions {:?}, {} log probs", actions.dim(), old_log_probs.len()),
        ));
    }
    let bn = b as f64;
    let actor_cache = agent.actor.forward_cached(observations.view())?;
    let mean = actor_cache.output();
    let entropy = DiagGaussian::new(&vec![0.0; d], &agent.log_std)?.entropy();
    let inv_var: Vec<f64> = agent.log_std.iter().map(|s| (-2.0 * s).exp()).collect();
    let log_norm: f64 = agent.log_std.iter().map(|s| s + 0.918_938_533_204_672_8).sum();

    let mut ratios = Vec::with_capacity(b);
    let mut log_ratios = Vec::with_capacity(b);
    for i in 0..b {
        let quad: f64 = (0..d)
            .map(|j| (actions[[i, j]] - mean[[i, j]]).powi(2) * inv_var[j])
            .sum();
        let new_lp = -0.5 * quad - log_norm;
        let lr = new_lp - old_log_probs[i];
        log_ratios.push(lr);
        ratios.push(lr.exp());
    }
    let (policy_loss, dl_dratio) = clipped_surrogate(&ratios, advantages, config.clip_coef);

    let mut grad_mean = Array2::zeros((b, d));
    let mut log_std_grads = vec![0.0; d];
    for i in 0..b {
        let dl_dlogp = dl_dratio[i] * ratios[i];
        for j in 0..d {
            let diff = actions[[i, j]] - mean[[i, j]];
            grad_mean[[i, j]] = dl_dlogp * diff * inv_var[j];
            log_std_grads[j] += dl_dlogp * (diff * diff * inv_var[j] - 1.0);
        }
    }
    for g in &mut log_std_grads {
        *g -= config.ent_coef;
    }
    let (actor_grads, _) = agent.actor.backward(&actor_cache, grad_mean.view())?;

    let critic_cache = agent.critic.forward_cached(observations.view())?;
    let values = critic_cache.output().column(0).to_owned();
    let mut grad_v = Array2::zeros((b, 1));
    let mut value_loss = 0.0;
    for i in 0..b {
        let err = values[i] - returns[i];
        value_loss += 0.5 * err * err / bn;
        grad_v[[i, 0]] = config.vf_coef * err / bn;
    }
    let (critic_grads, _) = agent.critic.backward(&critic_cache, grad_v.view())?;

    let approx_kl = ratios.iter().zip(&log_ratios).map(|(r, lr)| (r - 1.0) - lr).sum::<f64>() / bn;
    let clip_fraction = ratios.iter().filter(|r| (*r - 1.0).abs() > config.clip_coef).count() as f64 / bn;
    Ok(MinibatchOutput {
        policy_loss,
        value_loss,
        entropy,
        ratios,
        approx_kl,
        clip_fraction,
        actor_grads,
        log_std_grads,
        critic_grads,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PpoDiagnostics {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    /// Mean global gradient norm before clipping.
    pub grad_norm: f64,
    /// Probability ratios of the first minibatch of the first epoch.
    pub first_ratios: Vec<f64>,
    pub minibatch_updates: usize,
}

/// Runs `update_epochs` passes of shuffled minibatch updates over a full rollout.
/// `last_value` bootstraps the state after the final transition.
pub fn ppo_update<R: Rng + ?Sized>(
    agent: &mut PpoAgent,
    rollout: &Rollout,
    last_value: f64,
    config: &PpoConfig,
    rng: &mut R,
) -> Result<PpoDiagnostics> {
    let n = rollout.len();
    if n == 0 || !n.is_multiple_of(config.minibatches) {
        return Err(Error::Usage(format!(
            "rollout of {n} steps does not split into {} minibatches",
            config.minibatches
        )));
    }
    let (advantages, returns) = compute_gae(
        &rollout.rewards,
        &rollout.values,
        &rollout.dones,
        last_value,
        config.gamma,
        config.gae_lambda,
    )?;
    let mb = n / config.minibatches;
    let mut indices: Vec<usize> = (0..n).collect();
    let mut diag = PpoDiagnostics::default();
    let mut count = 0.0;
    for epoch in 0..config.update_epochs {
        indices.shuffle(rng);
        for (k, idx) in indices.chunks(mb).enumerate() {
            let obs = gather_rows(&rollout.observations, idx);
            let act = gather_rows(&rollout.actions, idx);
            let old: Vec<f64> = idx.iter().map(|&i| rollout.log_probs[i]).collect();
            let mut adv: Vec<f64> = idx.iter().map(|&i| advantages[i]).collect();
            if config.normalize_advantages {
                normalize_advantages(&mut adv);
            }
            let ret: Vec<f64> = idx.iter().map(|&i| returns[i]).collect();
            let mut out = minibatch_loss(agent, &obs, &act, &old, &adv, &ret, config)?;
            let loss = out.total_loss(config);
            if !loss.is_finite() {
                return Err(Error::Training(format!(
                    "non-finite PPO loss at epoch {epoch}, minibatch {k}: policy {}, value {}",
                    out.policy_loss, out.value_loss
                )));
            }
            let mut grads = out.grad_slices_mut();
            let norm = clip_global_norm(&mut grads, config.max_grad_norm);
            let grads: Vec<&[f64]> = grads.into_iter().map(|g| &*g).collect();
            agent.apply_gradients(&grads)?;
            if epoch == 0 && k == 0 {
                diag.first_ratios = out.ratios.clone();
            }
            diag.policy_loss += out.policy_loss;
            diag.value_loss += out.value_loss;
            diag.entropy += out.entropy;
            diag.approx_kl += out.approx_kl;
            diag.clip_fraction += out.clip_fraction;
            diag.grad_norm += norm;
            count += 1.0;
        }
    }
    diag.policy_loss /= count;
    diag.value_loss /= count;
    diag.entropy /= count;
    diag.approx_kl /= count;
    diag.clip_fraction /= count;
    diag.grad_norm /= count;
    diag.minibatch_updates = count as usize;
    Ok(diag)
}
