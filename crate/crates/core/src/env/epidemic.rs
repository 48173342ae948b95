use serde::{Deserialize, Serialize};

use super::config::{EnvConfig, EnvName};
use crate::error::{Error, Result};
use crate::interventions::{Action, ActionSpace, CostLedger};
use crate::sim::{integrate_interval, Rk4, SimState};

/// Diagnostics and raw values behind one transition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    /// Day at the start of the step.
    pub day: f64,
    pub week: usize,
    /// The action as applied, after clamping.
    pub action: Action<f64>,
    pub ledger: CostLedger<f64>,
    /// Compartments at the end of the step, clamped at zero.
    pub raw_observation: Vec<f64>,
    pub raw_reward: f64,
    pub min_compartment: f64,
    pub max_conservation_error: f64,
}

impl StepInfo {
    pub fn total_cost(&self) -> f64 {
        self.ledger.total()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Reset/step interface shared by the raw environment and its wrappers.
pub trait Environment {
    fn name(&self) -> EnvName;
    fn observation_dim(&self) -> usize;

    fn action_space(&self) -> ActionSpace {
        self.name().space
    }

    fn action_dim(&self) -> usize {
        self.action_space().dim()
    }

    fn horizon(&self) -> usize;

    /// Day at the start of the next step.
    fn day(&self) -> f64;

    fn reset(&mut self, seed: u64) -> Vec<f64>;

    /// Advances one week. Components outside [0, 1] are clamped.
    fn step(&mut self, action: &[f64]) -> Result<StepResult>;
}

/// The epidemic planning MDP: weekly steps of a deterministic compartment model.
#[derive(Clone, Debug)]
pub struct EpidemicEnv {
    config: EnvConfig,
    state: SimState<f64>,
    week: usize,
    seed: u64,
    rk4: Rk4<f64>,
}

/// Builds one of the six benchmark environments with default parameters.
pub fn make_env(name: &str) -> Result<EpidemicEnv> {
    EpidemicEnv::new(EnvConfig::new(name.parse()?))
}

impl EpidemicEnv {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        let state = Self::initial_state(&config);
        Ok(Self {
            config,
            state,
            week: 0,
            seed: 0,
            rk4: Rk4::new(),
        })
    }

    fn initial_state(config: &EnvConfig) -> SimState<f64> {
        let id = config.model.id;
        SimState::seeded(
            id.num_compartments(),
            config.model.population,
            id.seed_compartment(),
            config.episode.initial_infectious,
        )
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state(&self) -> &SimState<f64> {
        &self.state
    }

    pub fn week(&self) -> usize {
        self.week
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_done(&self) -> bool {
        self.week >= self.config.episode.horizon_weeks
    }
}

impl Environment for EpidemicEnv {
    fn name(&self) -> EnvName {
        self.config.name
    }

    fn observation_dim(&self) -> usize {
        self.config.model.num_compartments()
    }

    fn horizon(&self) -> usize {
        self.config.episode.horizon_weeks
    }

    fn day(&self) -> f64 {
        self.week as f64 * self.config.episode.step_days
    }

    // The dynamics are deterministic; the seed is only recorded.
    fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.seed = seed;
        self.week = 0;
        self.state = Self::initial_state(&self.config);
        self.state.observation()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        if self.is_done() {
            return Err(Error::Usage(format!(
                "step called after the episode ended at week {}; call reset first",
                self.week
            )));
        }
        let action = Action::clamped(self.action_space(), action)?;
        let cfg = &self.config;
        let mods = cfg.interventions.modifiers(&action)?;
        let days = cfg.episode.step_days;
        let out = integrate_interval(
            &mut self.rk4,
            &self.state,
            &cfg.model,
            &mods,
            days,
            cfg.episode.dt,
        )?;
        let ledger = cfg
            .interventions
            .ledger(&action, cfg.model.population, days, &out.deltas)?;
        let reward = -ledger.total();
        let day = self.day();
        self.state = out.state;
        self.week += 1;
        let observation = self.state.observation();
        Ok(StepResult {
            observation: observation.clone(),
            reward,
            done: self.is_done(),
            info: StepInfo {
                day,
                week: self.week - 1,
                action,
                ledger,
                raw_observation: observation,
                raw_reward: reward,
                min_compartment: out.min_compartment,
                max_conservation_error: out.max_conservation_error,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        let e = make_env("SIR-A").unwrap();
        assert_eq!((e.observation_dim(), e.action_dim()), (3, 2));
        let e = make_env("C15-B").unwrap();
        assert_eq!((e.observation_dim(), e.action_dim()), (15, 4));
        assert!(make_env("SIR-C").is_err());
    }

    #[test]
    fn reset_state() {
        let mut e = make_env("SIR-B").unwrap();
        let obs = e.reset(3);
        assert_eq!(obs, vec![1_999_900.0, 100.0, 0.0]);
        assert_eq!(obs.iter().sum::<f64>(), 2_000_000.0);
        let mut c = make_env("C15-A").unwrap();
        let obs = c.reset(0);
        assert_eq!(obs[crate::sim::c15::E], 100.0);
        assert_eq!(obs.iter().sum::<f64>(), 2_000_000.0);
    }

    #[test]
    fn first_step_costs() {
        let mut e = make_env("SIR-A").unwrap();
        e.reset(0);
        let r = e.step(&[0.0, 0.0]).unwrap();
        assert_eq!(r.info.ledger.intervention_total(), 0.0);
        assert!(r.info.ledger.disease.infections > 0.0);
        assert_eq!(r.reward, -r.info.ledger.disease_total());

        e.reset(0);
        let r = e.step(&[1.0, 0.0]).unwrap();
        assert_eq!(r.info.ledger.interventions.mask, 700_000.0);
        assert_eq!(r.reward + r.info.total_cost(), 0.0);
    }

    #[test]
    fn horizon_contract() {
        let mut e = make_env("SIRV-A").unwrap();
        e.reset(0);
        for week in 0..52 {
            let r = e.step(&[0.5, 0.5]).unwrap();
            assert_eq!(r.done, week == 51);
            assert_eq!(r.info.day, 7.0 * week as f64);
        }
        assert!(matches!(e.step(&[0.5, 0.5]), Err(Error::Usage(_))));
        e.reset(0);
        assert!(e.step(&[0.5, 0.5]).is_ok());
    }

    #[test]
    fn out_of_range_actions_are_clamped() {
        let mut e = make_env("SIR-B").unwrap();
        e.reset(0);
        let r = e.step(&[2.0, -1.0, 0.5, 9.0]).unwrap();
        assert_eq!(r.info.action.to_vec(), vec![1.0, 0.0, 0.5, 1.0]);
        assert!(e.step(&[0.1, 0.2]).is_err());
    }

    #[test]
    fn same_actions_same_trajectory() {
        let run = |seed| {
            let mut e = make_env("C15-B").unwrap();
            e.reset(seed);
            (0..52)
                .map(|k| {
                    let x = (k as f64 * 0.37).sin().abs();
                    e.step(&[x, 1.0 - x, x * x, 0.5]).unwrap()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(1), run(1));
        assert_eq!(run(1), run(2));
    }
}
