//! Adam with bias correction, and global-norm gradient clipping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

/// Moment estimates for a list of parameter tensors of fixed sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub step: u64,
    pub first_moment: Vec<Vec<T>>,
    pub second_moment: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(config: AdamConfig, sizes: &[usize]) -> Self {
        Self {
            config,
            step: 0,
            first_moment: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
            second_moment: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
        }
    }

    pub fn for_params(config: AdamConfig, params: &[&[T]]) -> Self {
        let sizes: Vec<usize> = params.iter().map(|p| p.len()).collect();
        Self::new(config, &sizes)
    }

    fn check_shapes(&self, params: &[&mut [T]], grads: &[&[T]]) -> Result<()> {
        let expected: Vec<usize> = self.first_moment.iter().map(Vec::len).collect();
        let found_p: Vec<usize> = params.iter().map(|p| p.len()).collect();
        let found_g: Vec<usize> = grads.iter().map(|g| g.len()).collect();
        if found_p != expected {
            return Err(Error::shape(format!("parameters {expected:?}"), format!("{found_p:?}")));
        }
        if found_g != expected {
            return Err(Error::shape(format!("gradients {expected:?}"), format!("{found_g:?}")));
        }
        Ok(())
    }

    /// One update `p -= lr * m_hat / (sqrt(v_hat) + eps)` on every tensor.
    pub fn apply(&mut self, params: &mut [&mut [T]], grads: &[&[T]]) -> Result<()> {
        self.check_shapes(params, grads)?;
        for (t, g) in grads.iter().enumerate() {
            if let Some(i) = g.iter().position(|v| !v.is_finite()) {
                return Err(Error::Optimizer(format!(
                    "non-finite gradient in tensor {t} at index {i}: {}",
                    g[i]
                )));
            }
        }
        self.step += 1;
        let c = &self.config;
        let (b1, b2) = (T::lit(c.beta1), T::lit(c.beta2));
        let (one_b1, one_b2) = (T::one() - b1, T::one() - b2);
        let step = i32::try_from(self.step).unwrap_or(i32::MAX);
        let bc1 = T::lit(1.0 - c.beta1.powi(step));
        let bc2 = T::lit(1.0 - c.beta2.powi(step));
        let (lr, eps) = (T::lit(c.lr), T::lit(c.eps));
        let moments = self.first_moment.iter_mut().zip(self.second_moment.iter_mut());
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(moments) {
            for (((p, &g), m), v) in p.iter_mut().zip(g.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + one_b1 * g;
                *v = b2 * *v + one_b2 * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Euclidean norm over all tensors.
pub fn global_norm<T: Scalar>(grads: &[&[T]]) -> T {
    grads
        .iter()
        .flat_map(|g| g.iter())
        .map(|&v| v * v)
        .sum::<T>()
        .sqrt()
}

/// Rescales the gradients so their global norm is at most `max_norm`. Returns the
/// norm before clipping.
pub fn clip_global_norm<T: Scalar>(grads: &mut [&mut [T]], max_norm: T) -> T {
    let norm = grads
        .iter()
        .flat_map(|g| g.iter())
        .map(|&v| v * v)
        .sum::<T>()
        .sqrt();
    let coef = max_norm / (norm + T::lit(1e-6));
    if coef < T::one() {
        for g in grads.iter_mut() {
            for v in g.iter_mut() {
                *v *= coef;
            }
        }
    }
    norm
}
