use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interventions::{ActionSpace, InterventionModel};
use crate::sim::{CompartmentModel, ModelId, ModelParams};

/// One of the six benchmark environments, e.g. `SIRV-B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EnvName {
    pub model: ModelId,
    pub space: ActionSpace,
}

impl EnvName {
    pub const ALL: [EnvName; 6] = [
        EnvName::new(ModelId::Sir, ActionSpace::A),
        EnvName::new(ModelId::Sir, ActionSpace::B),
        EnvName::new(ModelId::Sirv, ActionSpace::A),
        EnvName::new(ModelId::Sirv, ActionSpace::B),
        EnvName::new(ModelId::C15, ActionSpace::A),
        EnvName::new(ModelId::C15, ActionSpace::B),
    ];

    pub const fn new(model: ModelId, space: ActionSpace) -> Self {
        Self { model, space }
    }

    pub fn valid_names() -> String {
        Self::ALL
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl fmt::Display for EnvName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.model, self.space)
    }
}

impl FromStr for EnvName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || {
            Error::Config(format!(
                "unknown environment `{s}`; valid names are {}",
                EnvName::valid_names()
            ))
        };
        let (model, space) = s.rsplit_once('-').ok_or_else(unknown)?;
        let model = model.parse::<ModelId>().map_err(|_| unknown())?;
        let space = space.parse::<ActionSpace>().map_err(|_| unknown())?;
        Ok(EnvName::new(model, space))
    }
}

impl Serialize for EnvName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EnvName {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Episode structure shared by all environments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeParams {
    pub horizon_weeks: usize,
    pub step_days: f64,
    /// RK4 step in days.
    pub dt: f64,
    pub population: f64,
    pub initial_infectious: f64,
    pub discount: f64,
}

impl Default for EpisodeParams {
    fn default() -> Self {
        Self {
            horizon_weeks: 52,
            step_days: 7.0,
            dt: 0.1,
            population: 2_000_000.0,
            initial_infectious: 100.0,
            discount: 0.99,
        }
    }
}

/// Everything needed to build an environment.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvConfig {
    pub name: EnvName,
    pub model: CompartmentModel<f64>,
    pub interventions: InterventionModel<f64>,
    pub episode: EpisodeParams,
}

impl EnvConfig {
    pub fn new(name: EnvName) -> Self {
        Self::with_overrides(
            name,
            ModelParams::default(),
            InterventionModel::default(),
            EpisodeParams::default(),
        )
    }

    pub fn with_overrides(
        name: EnvName,
        params: ModelParams<f64>,
        interventions: InterventionModel<f64>,
        episode: EpisodeParams,
    ) -> Self {
        Self {
            name,
            model: CompartmentModel {
                id: name.model,
                params,
                population: episode.population,
            },
            interventions,
            episode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let e = &self.episode;
        if e.horizon_weeks == 0 {
            return Err(Error::Config("horizon_weeks must be positive".into()));
        }
        if !(e.dt > 0.0 && e.dt <= e.step_days) {
            return Err(Error::Config(format!(
                "dt = {} must lie in (0, step_days = {}]",
                e.dt, e.step_days
            )));
        }
        if !(e.initial_infectious >= 0.0 && e.initial_infectious <= e.population) {
            return Err(Error::Config(format!(
                "initial_infectious = {} must lie in [0, N]",
                e.initial_infectious
            )));
        }
        if !(0.0..=1.0).contains(&e.discount) {
            return Err(Error::Config(format!("discount {} outside [0, 1]", e.discount)));
        }
        if self.model.id != self.name.model {
            return Err(Error::Config(format!(
                "model {} does not match environment {}",
                self.model.id, self.name
            )));
        }
        Ok(())
    }
}
