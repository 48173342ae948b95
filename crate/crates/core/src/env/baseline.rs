//! Hand-crafted intervention plans used as reference points.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::evaluate::Policy;
use crate::error::{Error, Result};
use crate::interventions::{Action, ActionSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselineKind {
    Aggressive,
    Lax,
    Random,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [BaselineKind::Aggressive, BaselineKind::Lax, BaselineKind::Random];

    pub fn is_deterministic(self) -> bool {
        self != BaselineKind::Random
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::Aggressive => "Aggressive",
            BaselineKind::Lax => "Lax",
            BaselineKind::Random => "Random",
        })
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aggressive" => Ok(BaselineKind::Aggressive),
            "lax" => Ok(BaselineKind::Lax),
            "random" => Ok(BaselineKind::Random),
            _ => Err(Error::Config(format!(
                "unknown baseline policy `{s}` (expected aggressive, lax or random)"
            ))),
        }
    }
}

/// Settings of the fixed plans. Vaccination targets are population coverages reached
/// at a constant daily rate over a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineParams {
    pub aggressive_mask: f64,
    pub aggressive_coverage: f64,
    pub aggressive_window_days: f64,
    /// Closures are fully applied before this day.
    pub aggressive_closure_days: f64,
    pub aggressive_closure_early: f64,
    pub aggressive_closure_late: f64,
    pub lax_mask: f64,
    pub lax_coverage: f64,
    pub lax_window_days: f64,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            aggressive_mask: 0.8,
            aggressive_coverage: 0.85,
            aggressive_window_days: 270.0,
            aggressive_closure_days: 120.0,
            aggressive_closure_early: 1.0,
            aggressive_closure_late: 0.5,
            lax_mask: 1.0,
            lax_coverage: 0.70,
            lax_window_days: 365.0,
        }
    }
}

/// Constant dose rate reaching `coverage` of `population` in `window_days`, as a
/// fraction of the daily dose supply.
pub fn coverage_rate(coverage: f64, population: f64, window_days: f64, max_daily_doses: f64) -> f64 {
    (coverage * population / window_days / max_daily_doses).clamp(0.0, 1.0)
}

#[derive(Clone, Debug)]
pub struct BaselinePolicy {
    pub kind: BaselineKind,
    pub space: ActionSpace,
    pub params: BaselineParams,
    pub population: f64,
    pub max_daily_doses: f64,
    rng: ChaCha8Rng,
}

impl BaselinePolicy {
    pub fn new(kind: BaselineKind, space: ActionSpace, population: f64, max_daily_doses: f64) -> Self {
        Self::with_params(kind, space, BaselineParams::default(), population, max_daily_doses)
    }

    pub fn with_params(
        kind: BaselineKind,
        space: ActionSpace,
        params: BaselineParams,
        population: f64,
        max_daily_doses: f64,
    ) -> Self {
        Self {
            kind,
            space,
            params,
            population,
            max_daily_doses,
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }

    /// Action prescribed at `day`. Only the Random plan draws from `rng`.
    pub fn action_at<R: Rng + ?Sized>(&self, day: f64, rng: &mut R) -> Action<f64> {
        prescribe(self.kind, self.space, &self.params, self.population, self.max_daily_doses, day, rng)
    }
}

fn prescribe<R: Rng + ?Sized>(
    kind: BaselineKind,
    space: ActionSpace,
    p: &BaselineParams,
    population: f64,
    max_daily_doses: f64,
    day: f64,
    rng: &mut R,
) -> Action<f64> {
    let (m, v, s, w) = match kind {
        BaselineKind::Aggressive => {
            let closure = if day < p.aggressive_closure_days {
                p.aggressive_closure_early
            } else {
                p.aggressive_closure_late
            };
            let v = coverage_rate(
                p.aggressive_coverage,
                population,
                p.aggressive_window_days,
                max_daily_doses,
            );
            (p.aggressive_mask, v, closure, closure)
        }
        BaselineKind::Lax => {
            let v = coverage_rate(p.lax_coverage, population, p.lax_window_days, max_daily_doses);
            (p.lax_mask, v, 0.0, 0.0)
        }
        BaselineKind::Random => {
            let (m, v) = (rng.random::<f64>(), rng.random::<f64>());
            match space {
                ActionSpace::A => (m, v, 0.0, 0.0),
                ActionSpace::B => (m, v, rng.random::<f64>(), rng.random::<f64>()),
            }
        }
    };
    let (s, w) = match space {
        ActionSpace::A => (0.0, 0.0),
        ActionSpace::B => (s, w),
    };
    Action { m, v, s, w, space }
}

impl Policy for BaselinePolicy {
    fn reset(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    fn act(&mut self, _observation: &[f64], day: f64) -> Vec<f64> {
        prescribe(
            self.kind,
            self.space,
            &self.params,
            self.population,
            self.max_daily_doses,
            day,
            &mut self.rng,
        )
        .to_vec()
    }
}
