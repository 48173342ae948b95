//! The six benchmark MDPs, normalization wrappers and baseline policies.

mod baseline;
mod config;
mod epidemic;
mod evaluate;
mod normalize;
mod trajectory;

pub use baseline::{coverage_rate, BaselineKind, BaselineParams, BaselinePolicy};
pub use config::{EnvConfig, EnvName, EpisodeParams};
pub use epidemic::{make_env, Environment, EpidemicEnv, StepInfo, StepResult};
pub use evaluate::{discounted_return, evaluate_policy, run_episode, Episode, Policy, SummaryStats};
pub use normalize::{
    normalize_wrapper, NormalizeWrapper, NormalizerState, RunningStats, VecRunningStats,
    NORMALIZATION_EPSILON,
};
pub use trajectory::{trajectory_header, write_trajectory_csv};
