//! Epidemic intervention planning: compartmental simulators, a cost model for
//! non-pharmaceutical and vaccination interventions, weekly decision environments,
//! and PPO / SAC agents trained on them.

pub mod config;
pub mod env;
pub mod error;
pub mod interventions;
pub mod nn;
pub mod rl;
pub mod scalar;
pub mod sim;

pub use config::{ExperimentConfig, RunConfig};
pub use env::{EnvConfig, EnvName, EpidemicEnv, Environment};
pub use error::{Error, Result};
pub use rl::{train, Algorithm, Checkpoint, ScheduleMode, TrainOutcome};
pub use scalar::Scalar;

/// Compartmental model in double precision.
pub type Model = sim::CompartmentModel<f64>;
/// Simulator state in double precision.
pub type State = sim::SimState<f64>;
/// Model rates in double precision.
pub type Params = sim::ModelParams<f64>;
/// Intervention bundle in double precision.
pub type Interventions = interventions::InterventionModel<f64>;
/// Cost breakdown in double precision.
pub type Ledger = interventions::CostLedger<f64>;
/// Network in double precision, as used by the agents.
pub type Mlp64 = nn::Mlp<f64>;
/// Network in single precision.
pub type Mlp32 = nn::Mlp<f32>;
