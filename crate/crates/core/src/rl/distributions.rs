//! Continuous action distributions for the policy heads.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Added inside the squash correction to keep it finite at saturated actions.
pub const SQUASH_EPSILON: f64 = 1e-6;

fn check_std(log_std: &[f64]) -> Result<()> {
    match log_std.iter().find(|v| !v.exp().is_finite() || v.is_nan()) {
        Some(v) => Err(Error::Policy(format!("non-finite standard deviation (log std {v})"))),
        None => Ok(()),
    }
}

/// Diagonal Gaussian with per-dimension log standard deviations.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagGaussian<'a> {
    pub mean: &'a [f64],
    pub log_std: &'a [f64],
}

impl<'a> DiagGaussian<'a> {
    pub fn new(mean: &'a [f64], log_std: &'a [f64]) -> Result<Self> {
        if mean.len() != log_std.len() {
            return Err(Error::shape(format!("{} log std entries", mean.len()), log_std.len()));
        }
        check_std(log_std)?;
        Ok(Self { mean, log_std })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.mean
            .iter()
            .zip(self.log_std)
            .map(|(&m, &s)| m + s.exp() * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    pub fn mode(&self) -> Vec<f64> {
        self.mean.to_vec()
    }

    pub fn log_prob(&self, x: &[f64]) -> f64 {
        self.mean
            .iter()
            .zip(self.log_std)
            .zip(x)
            .map(|((&m, &s), &x)| {
                let z = (x - m) / s.exp();
                -0.5 * z * z - s - HALF_LN_2PI
            })
            .sum()
    }

    pub fn entropy(&self) -> f64 {
        self.log_std.iter().map(|s| s + 0.5 + HALF_LN_2PI).sum()
    }
}

/// Gaussian pushed through `tanh` and rescaled from [-1, 1] to [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct SquashedGaussian<'a> {
    pub base: DiagGaussian<'a>,
}

/// One draw from a [`SquashedGaussian`].
#[derive(Clone, Debug, PartialEq)]
pub struct SquashedSample {
    /// Standard normal noise used for the draw.
    pub noise: Vec<f64>,
    /// Gaussian sample before squashing.
    pub pre_tanh: Vec<f64>,
    /// `tanh(pre_tanh)`, in (-1, 1).
    pub squashed: Vec<f64>,
    /// Environment action in [0, 1].
    pub action: Vec<f64>,
    pub log_prob: f64,
}

/// Maps a squashed value in [-1, 1] to an action in [0, 1].
#[inline]
pub fn to_unit_interval(squashed: f64) -> f64 {
    0.5 * (squashed + 1.0)
}

impl<'a> SquashedGaussian<'a> {
    pub fn new(mean: &'a [f64], log_std: &'a [f64]) -> Result<Self> {
        Ok(Self {
            base: DiagGaussian::new(mean, log_std)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.base.mean.len()
    }

    /// Sample from given standard normal noise.
    pub fn reparameterize(&self, noise: Vec<f64>) -> SquashedSample {
        let pre_tanh: Vec<f64> = self
            .base
            .mean
            .iter()
            .zip(self.base.log_std)
            .zip(&noise)
            .map(|((&m, &s), &e)| m + s.exp() * e)
            .collect();
        let squashed: Vec<f64> = pre_tanh.iter().map(|u| u.tanh()).collect();
        let action = squashed.iter().map(|&t| to_unit_interval(t)).collect();
        let log_prob = self.log_prob_pre_tanh(&pre_tanh);
        SquashedSample {
            noise,
            pre_tanh,
            squashed,
            action,
            log_prob,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SquashedSample {
        let noise = (0..self.dim()).map(|_| rng.sample(StandardNormal)).collect();
        self.reparameterize(noise)
    }

    /// Deterministic action `(tanh(mean) + 1) / 2`.
    pub fn mode(&self) -> Vec<f64> {
        self.base.mean.iter().map(|m| to_unit_interval(m.tanh())).collect()
    }

    /// Log density of the [0, 1] action obtained from `pre_tanh`: the Gaussian term,
    /// the tanh Jacobian and `d ln 2` from the affine rescale.
    pub fn log_prob_pre_tanh(&self, pre_tanh: &[f64]) -> f64 {
        let jacobian: f64 = pre_tanh
            .iter()
            .map(|u| {
                let t = u.tanh();
                (1.0 - t * t + SQUASH_EPSILON).ln()
            })
            .sum();
        self.base.log_prob(pre_tanh) - jacobian + self.dim() as f64 * std::f64::consts::LN_2
    }

    /// Log density at an action in the open unit cube.
    pub fn log_prob(&self, action: &[f64]) -> f64 {
        let pre: Vec<f64> = action.iter().map(|&a| (2.0 * a - 1.0).atanh()).collect();
        self.log_prob_pre_tanh(&pre)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn squashed_density_integrates_to_one() {
        for (mean, log_std) in [(0.0, 0.0), (0.4, -0.7), (-0.8, 0.3)] {
            let (m, ls) = ([mean], [log_std]);
            let dist = SquashedGaussian::new(&m, &ls).unwrap();
            let n = 200_000;
            let h = 1.0 / n as f64;
            let mass: f64 = (0..n)
                .map(|i| dist.log_prob(&[(i as f64 + 0.5) * h]).exp() * h)
                .sum();
            assert!((mass - 1.0).abs() < 1e-3, "mass {mass} for mean {mean}, log_std {log_std}");
        }
    }

    #[test]
    fn gaussian_log_prob_standard_normal() {
        let d = DiagGaussian::new(&[0.0], &[0.0]).unwrap();
        assert!((d.log_prob(&[0.0]) + HALF_LN_2PI).abs() < 1e-15);
        assert!((d.log_prob(&[1.0]) + 0.5 + HALF_LN_2PI).abs() < 1e-15);
        assert!((d.entropy() - (0.5 + HALF_LN_2PI)).abs() < 1e-15);
    }

    #[test]
    fn vanishing_std_returns_mean() {
        let mean = [0.3, -1.2];
        let d = DiagGaussian::new(&mean, &[-40.0, -40.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = d.sample(&mut rng);
        for (a, b) in x.iter().zip(&mean) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(d.mode(), mean.to_vec());
    }

    #[test]
    fn zero_pre_activation_gives_midpoint() {
        let s = SquashedGaussian::new(&[0.0, 0.0], &[0.0, 0.0]).unwrap();
        let draw = s.reparameterize(vec![0.0, 0.0]);
        assert_eq!(draw.action, vec![0.5, 0.5]);
        assert_eq!(s.mode(), vec![0.5, 0.5]);
    }

    #[test]
    fn squashed_samples_stay_in_unit_interval() {
        let s = SquashedGaussian::new(&[3.0, -2.0, 0.0], &[1.0, 0.5, 2.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let d = s.sample(&mut rng);
            assert!(d.action.iter().all(|a| (0.0..=1.0).contains(a)));
            assert!(d.log_prob.is_finite());
        }
    }

    #[test]
    fn log_prob_consistent_between_spaces() {
        let s = SquashedGaussian::new(&[0.4], &[-0.3]).unwrap();
        let d = s.reparameterize(vec![0.7]);
        assert!((s.log_prob(&d.action) - d.log_prob).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_std() {
        assert!(matches!(DiagGaussian::new(&[0.0], &[f64::NAN]), Err(Error::Policy(_))));
        assert!(matches!(DiagGaussian::new(&[0.0], &[1e6]), Err(Error::Policy(_))));
        assert!(DiagGaussian::new(&[0.0, 1.0], &[0.0]).is_err());
    }
}
