//! Streaming z-score normalization of observations and rewards.

use serde::{Deserialize, Serialize};

use super::config::EnvName;
use super::epidemic::{Environment, StepResult};
use crate::error::Result;
use crate::scalar::Scalar;

/// Single-pass mean and variance (Welford).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RunningStats<T> {
    pub count: u64,
    pub mean: T,
    /// Sum of squared deviations from the mean.
    pub m2: T,
}

impl<T: Scalar> RunningStats<T> {
    pub fn new() -> Self {
        Self {
            count: 0,
            mean: T::zero(),
            m2: T::zero(),
        }
    }

    pub fn push(&mut self, x: T) {
        self.count += 1;
        let n = T::from_u64(self.count).unwrap_or_else(T::infinity);
        let delta = x - self.mean;
        self.mean += delta / n;
        self.m2 += delta * (x - self.mean);
    }

    /// Population variance `M2 / count`; zero before any sample.
    pub fn variance(&self) -> T {
        if self.count == 0 {
            return T::zero();
        }
        let n = T::from_u64(self.count).unwrap_or_else(T::infinity);
        (self.m2 / n).max(T::zero())
    }

    pub fn std(&self) -> T {
        self.variance().sqrt()
    }

    /// `(x - mean) / (std + eps)`, defined as 0 until two samples have been seen.
    pub fn normalize(&self, x: T, eps: T) -> T {
        if self.count < 2 {
            T::zero()
        } else {
            (x - self.mean) / (self.std() + eps)
        }
    }
}

/// Running statistics of each component of a vector stream.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct VecRunningStats<T> {
    pub components: Vec<RunningStats<T>>,
}

impl<T: Scalar> VecRunningStats<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            components: vec![RunningStats::new(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn push(&mut self, x: &[T]) {
        debug_assert_eq!(x.len(), self.components.len());
        for (s, &v) in self.components.iter_mut().zip(x) {
            s.push(v);
        }
    }

    pub fn normalize(&self, x: &[T], eps: T) -> Vec<T> {
        self.components
            .iter()
            .zip(x)
            .map(|(s, &v)| s.normalize(v, eps))
            .collect()
    }
}

pub const NORMALIZATION_EPSILON: f64 = 1e-8;

/// Frozen normalization state, saved with checkpoints so a trained policy sees the
/// same inputs at evaluation time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizerState {
    pub observation: VecRunningStats<f64>,
    pub reward: RunningStats<f64>,
}

/// Replaces observations and rewards with their running z-scores. Raw values stay
/// available in [`super::StepInfo`].
#[derive(Clone, Debug)]
pub struct NormalizeWrapper<E> {
    env: E,
    obs_stats: VecRunningStats<f64>,
    reward_stats: RunningStats<f64>,
    frozen: bool,
    epsilon: f64,
}

/// Wraps `env` with fresh statistics.
pub fn normalize_wrapper<E: Environment>(env: E) -> NormalizeWrapper<E> {
    NormalizeWrapper::new(env)
}

impl<E: Environment> NormalizeWrapper<E> {
    pub fn new(env: E) -> Self {
        let dim = env.observation_dim();
        Self {
            env,
            obs_stats: VecRunningStats::new(dim),
            reward_stats: RunningStats::new(),
            frozen: false,
            epsilon: NORMALIZATION_EPSILON,
        }
    }

    /// Uses existing statistics without updating them.
    pub fn frozen(env: E, state: NormalizerState) -> Self {
        Self {
            env,
            obs_stats: state.observation,
            reward_stats: state.reward,
            frozen: true,
            epsilon: NORMALIZATION_EPSILON,
        }
    }

    pub fn set_frozen(&mut self, frozen: bool) {
        self.frozen = frozen;
    }

    pub fn state(&self) -> NormalizerState {
        NormalizerState {
            observation: self.obs_stats.clone(),
            reward: self.reward_stats,
        }
    }

    pub fn inner(&self) -> &E {
        &self.env
    }

    pub fn into_inner(self) -> E {
        self.env
    }

    fn observe(&mut self, raw: &[f64]) -> Vec<f64> {
        if !self.frozen {
            self.obs_stats.push(raw);
        }
        self.obs_stats.normalize(raw, self.epsilon)
    }
}

impl<E: Environment> Environment for NormalizeWrapper<E> {
    fn name(&self) -> EnvName {
        self.env.name()
    }

    fn observation_dim(&self) -> usize {
        self.env.observation_dim()
    }

    fn horizon(&self) -> usize {
        self.env.horizon()
    }

    fn day(&self) -> f64 {
        self.env.day()
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let raw = self.env.reset(seed);
        self.observe(&raw)
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        let mut r = self.env.step(action)?;
        r.observation = self.observe(&r.observation);
        if !self.frozen {
            self.reward_stats.push(r.reward);
        }
        r.reward = self.reward_stats.normalize(r.reward, self.epsilon);
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::make_env;
    use proptest::prelude::*;

    fn batch(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        (mean, var)
    }

    #[test]
    fn one_to_hundred() {
        let mut s = RunningStats::new();
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        for &x in &xs {
            s.push(x);
        }
        let (mean, var) = batch(&xs);
        assert_eq!(s.mean, 50.5);
        assert!((s.variance() - var).abs() / var < 1e-10);
        assert_eq!(mean, 50.5);
    }

    #[test]
    fn first_sample_normalizes_to_zero() {
        let mut s = RunningStats::new();
        s.push(1234.5);
        assert_eq!(s.normalize(1234.5, 1e-8), 0.0);
        assert_eq!(s.normalize(-1e9, 1e-8), 0.0);
    }

    #[test]
    fn constant_stream_tends_to_zero() {
        let mut s = RunningStats::new();
        for _ in 0..1000 {
            s.push(-7.25);
        }
        assert_eq!(s.normalize(-7.25, 1e-8), 0.0);
    }

    #[test]
    fn wrapper_keeps_raw_trajectory() {
        let actions: Vec<[f64; 4]> = (0..52)
            .map(|k| {
                let x = (k as f64 * 0.61).cos().abs();
                [x, 0.3, 1.0 - x, 0.2]
            })
            .collect();
        let mut raw = make_env("SIRV-B").unwrap();
        let mut wrapped = normalize_wrapper(make_env("SIRV-B").unwrap());
        let first_raw = raw.reset(0);
        let first_norm = wrapped.reset(0);
        assert!(first_norm.iter().all(|&v| v == 0.0));
        assert_eq!(first_raw.len(), first_norm.len());
        for a in &actions {
            let r = raw.step(a).unwrap();
            let w = wrapped.step(a).unwrap();
            assert_eq!(r.info, w.info);
            assert_eq!(r.observation, w.info.raw_observation);
        }
    }

    #[test]
    fn frozen_wrapper_does_not_update() {
        let mut w = normalize_wrapper(make_env("SIR-A").unwrap());
        w.reset(0);
        for _ in 0..10 {
            w.step(&[0.5, 0.5]).unwrap();
        }
        let snapshot = w.state();
        let mut f = NormalizeWrapper::frozen(make_env("SIR-A").unwrap(), snapshot.clone());
        f.reset(0);
        f.step(&[0.5, 0.5]).unwrap();
        assert_eq!(f.state(), snapshot);
    }

    proptest! {
        #[test]
        fn matches_two_pass_statistics(xs in prop::collection::vec(-1e6..1e6f64, 2..400)) {
            let mut s = RunningStats::new();
            for &x in &xs {
                s.push(x);
            }
            let (mean, var) = batch(&xs);
            prop_assert!((s.mean - mean).abs() <= 1e-9 * mean.abs().max(1.0));
            prop_assert!((s.variance() - var).abs() <= 1e-9 * var.max(1e-6));
        }
    }
}
