//! One JSON document holding every tunable constant of an experiment.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::{BaselineParams, EnvConfig, EnvName, EpisodeParams};
use crate::error::{Error, Result};
use crate::interventions::{CostRates, FacilityParams, InterventionModel, InterventionParams};
use crate::rl::{AlgoConfig, Algorithm, PpoConfig, SacConfig};
use crate::sim::ModelParams;

/// Episode structure, baseline plans and the default seed list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub episode: EpisodeParams,
    pub baselines: BaselineParams,
    pub seeds: Vec<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            episode: EpisodeParams::default(),
            baselines: BaselineParams::default(),
            seeds: vec![0, 1, 2, 3],
        }
    }
}

/// Missing sections and fields take their defaults; unknown top-level keys are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelParams<f64>,
    pub costs: CostRates<f64>,
    pub facilities: FacilityParams<f64>,
    pub interventions: InterventionParams<f64>,
    pub ppo: PpoConfig,
    pub sac: SacConfig,
    pub run: RunConfig,
}

impl ExperimentConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(json)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Compact serialization with fixed field order, suitable for hashing.
    pub fn canonical_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.ppo.validate()?;
        self.sac.validate()?;
        for name in EnvName::ALL {
            self.env_config(name).validate()?;
        }
        Ok(())
    }

    pub fn env_config(&self, name: EnvName) -> EnvConfig {
        let interventions = InterventionModel {
            interventions: self.interventions.clone(),
            facilities: self.facilities.clone(),
            costs: self.costs.clone(),
        };
        EnvConfig::with_overrides(name, self.model.clone(), interventions, self.run.episode.clone())
    }

    pub fn algo_config(&self, algorithm: Algorithm) -> AlgoConfig {
        match algorithm {
            Algorithm::Ppo => AlgoConfig::Ppo(self.ppo.clone()),
            Algorithm::Sac => AlgoConfig::Sac(self.sac.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_default() {
        assert_eq!(ExperimentConfig::from_json("{}").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn partial_override() {
        let c = ExperimentConfig::from_json(
            r#"{"model": {"beta": 0.25}, "costs": {"per_death": 50000}, "ppo": {"lr": 0.001}, "run": {"seeds": [7]}}"#,
        )
        .unwrap();
        assert_eq!(c.model.beta, 0.25);
        assert_eq!(c.model.gamma, 0.1);
        assert_eq!(c.costs.per_death, 50_000.0);
        assert_eq!(c.ppo.lr, 0.001);
        assert_eq!(c.ppo.rollout_steps, 2048);
        assert_eq!(c.run.seeds, vec![7]);
        let env = c.env_config("SIR-A".parse().unwrap());
        assert_eq!(env.model.params.beta, 0.25);
        assert_eq!(env.interventions.costs.per_death, 50_000.0);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(ExperimentConfig::from_json(r#"{"modle": {}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"model": {"betta": 0.2}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"ppo": {"minibatches": 7}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"run": {"episode": {"dt": -1}}}"#).is_err());
    }

    #[test]
    fn canonical_json_roundtrips() {
        let c = ExperimentConfig::default();
        let json = c.canonical_json().unwrap();
        assert_eq!(ExperimentConfig::from_json(&json).unwrap(), c);
        let mut d = c.clone();
        d.sac.tau = 0.01;
        assert_ne!(d.canonical_json().unwrap(), json);
    }
}
