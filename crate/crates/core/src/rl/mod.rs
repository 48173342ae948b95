//! PPO and SAC for continuous interventions.

mod buffers;
mod checkpoint;
mod distributions;
mod gae;
mod ppo;
mod sac;
mod train;

pub use buffers::{Batch, ReplayBuffer, Rollout};
pub use distributions::{to_unit_interval, DiagGaussian, SquashedGaussian, SquashedSample, SQUASH_EPSILON};
pub use gae::compute_gae;
pub use ppo::{
    clipped_surrogate, minibatch_loss, normalize_advantages, ppo_update, MinibatchOutput, PpoAgent, PpoConfig,
    PpoDiagnostics,
};
pub use sac::{sac_update, SacAgent, SacConfig, SacDiagnostics, LOG_STD_MAX, LOG_STD_MIN};
pub use checkpoint::{Algorithm, Checkpoint, CheckpointPolicy, PolicyParams, ScheduleMode, CHECKPOINT_FORMAT};
pub use train::{
    train, train_with, AlgoConfig, BestEpisode, EpisodeRecord, SeedStreams, TrainControl, TrainOutcome,
    UpdateDiagnostics, INIT_STREAM, SAMPLING_STREAM, SEED_SPLITTING_RULE,
};
