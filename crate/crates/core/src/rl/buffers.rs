//! On-policy rollout storage and the off-policy replay buffer.

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};

/// Fixed-length on-policy trajectory segment; episodes may restart inside it.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Rollout {
    pub observations: Vec<Vec<f64>>,
    /// Raw policy samples, before the environment clamps them.
    pub actions: Vec<Vec<f64>>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    /// The transition ended its episode.
    pub dones: Vec<bool>,
}

impl Rollout {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            observations: Vec::with_capacity(n),
            actions: Vec::with_capacity(n),
            log_probs: Vec::with_capacity(n),
            values: Vec::with_capacity(n),
            rewards: Vec::with_capacity(n),
            dones: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, obs: Vec<f64>, action: Vec<f64>, log_prob: f64, value: f64, reward: f64, done: bool) {
        self.observations.push(obs);
        self.actions.push(action);
        self.log_probs.push(log_prob);
        self.values.push(value);
        self.rewards.push(reward);
        self.dones.push(done);
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn clear(&mut self) {
        self.observations.clear();
        self.actions.clear();
        self.log_probs.clear();
        self.values.clear();
        self.rewards.clear();
        self.dones.clear();
    }
}

/// Column-stacked rows of `rows[indices]`.
pub(crate) fn gather_rows(rows: &[Vec<f64>], indices: &[usize]) -> Array2<f64> {
    let dim = rows.first().map_or(0, Vec::len);
    Array2::from_shape_fn((indices.len(), dim), |(i, j)| rows[indices[i]][j])
}

/// Uniformly sampled training batch.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub observations: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Vec<f64>,
    pub next_observations: Array2<f64>,
    pub dones: Vec<bool>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

/// Ring buffer of transitions; once full, new items overwrite the oldest.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    obs_dim: usize,
    action_dim: usize,
    observations: Vec<f64>,
    actions: Vec<f64>,
    rewards: Vec<f64>,
    next_observations: Vec<f64>,
    dones: Vec<bool>,
    next: usize,
    len: usize,
    inserted: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, obs_dim: usize, action_dim: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay buffer capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            obs_dim,
            action_dim,
            observations: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            next_observations: Vec::new(),
            dones: Vec::new(),
            next: 0,
            len: 0,
            inserted: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Total number of insertions, including overwritten ones.
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn push(&mut self, obs: &[f64], action: &[f64], reward: f64, next_obs: &[f64], done: bool) -> Result<()> {
        if obs.len() != self.obs_dim || next_obs.len() != self.obs_dim {
            return Err(Error::shape(format!("observation of length {}", self.obs_dim), obs.len()));
        }
        if action.len() != self.action_dim {
            return Err(Error::shape(format!("action of length {}", self.action_dim), action.len()));
        }
        if self.len < self.capacity {
            self.observations.extend_from_slice(obs);
            self.actions.extend_from_slice(action);
            self.rewards.push(reward);
            self.next_observations.extend_from_slice(next_obs);
            self.dones.push(done);
            self.len += 1;
        } else {
            let i = self.next;
            let (o, a) = (i * self.obs_dim, i * self.action_dim);
            self.observations[o..o + self.obs_dim].copy_from_slice(obs);
            self.actions[a..a + self.action_dim].copy_from_slice(action);
            self.rewards[i] = reward;
            self.next_observations[o..o + self.obs_dim].copy_from_slice(next_obs);
            self.dones[i] = done;
        }
        self.next = (self.next + 1) % self.capacity;
        self.inserted += 1;
        Ok(())
    }

    /// Reward of the item at storage slot `i`.
    pub fn reward_at(&self, i: usize) -> Option<f64> {
        self.rewards.get(i).copied()
    }

    /// Batch of `n` transitions drawn uniformly with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Batch> {
        if self.len == 0 {
            return Err(Error::Usage("cannot sample from an empty replay buffer".into()));
        }
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..self.len)).collect();
        Ok(self.gather(&idx))
    }

    pub fn gather(&self, idx: &[usize]) -> Batch {
        let (od, ad) = (self.obs_dim, self.action_dim);
        Batch {
            observations: Array2::from_shape_fn((idx.len(), od), |(r, c)| self.observations[idx[r] * od + c]),
            actions: Array2::from_shape_fn((idx.len(), ad), |(r, c)| self.actions[idx[r] * ad + c]),
            rewards: idx.iter().map(|&i| self.rewards[i]).collect(),
            next_observations: Array2::from_shape_fn((idx.len(), od), |(r, c)| {
                self.next_observations[idx[r] * od + c]
            }),
            dones: idx.iter().map(|&i| self.dones[i]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ring_overwrites_oldest() {
        let (cap, k) = (8, 3);
        let mut b = ReplayBuffer::new(cap, 1, 1).unwrap();
        for i in 0..cap + k {
            let x = i as f64;
            b.push(&[x], &[x], x, &[x + 1.0], false).unwrap();
        }
        assert_eq!(b.len(), cap);
        let mut stored: Vec<f64> = (0..cap).map(|i| b.reward_at(i).unwrap()).collect();
        stored.sort_by(f64::total_cmp);
        let expected: Vec<f64> = (k..cap + k).map(|i| i as f64).collect();
        assert_eq!(stored, expected);
    }

    #[test]
    fn seeded_sampling() {
        let mut b = ReplayBuffer::new(100, 2, 1).unwrap();
        for i in 0..50 {
            let x = i as f64;
            b.push(&[x, -x], &[0.5], x, &[x, x], i % 7 == 0).unwrap();
        }
        let s1 = b.sample(16, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let s2 = b.sample(16, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(s1, s2);
        for r in 0..16 {
            assert_eq!(s1.observations[[r, 0]], s1.rewards[r]);
            assert_eq!(s1.observations[[r, 1]], -s1.rewards[r]);
        }
        assert!(ReplayBuffer::new(4, 2, 1).unwrap().sample(1, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn dimension_checks() {
        let mut b = ReplayBuffer::new(4, 2, 2).unwrap();
        assert!(b.push(&[1.0], &[0.0, 0.0], 0.0, &[1.0, 1.0], false).is_err());
        assert!(b.push(&[1.0, 1.0], &[0.0], 0.0, &[1.0, 1.0], false).is_err());
        assert!(ReplayBuffer::new(0, 1, 1).is_err());
    }
}
