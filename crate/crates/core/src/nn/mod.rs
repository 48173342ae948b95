//! Small dense networks and their optimizer.

mod adam;
mod init;
mod mlp;

pub use adam::{clip_global_norm, global_norm, AdamConfig, AdamState};
pub use init::{fan_in_uniform, orthogonal};
pub use mlp::{Activation, Dense, ForwardCache, Gradients, Mlp};
