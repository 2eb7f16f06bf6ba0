//! Proximal policy optimisation: vectorised collection, GAE, the clipped
//! surrogate loss and the minibatch update loop.

pub mod agent;
pub mod buffer;
pub mod config;
pub mod gae;
pub mod loss;
pub mod rollout;

pub use agent::{chunk_lengths, ActOutput, PpoAgent, UpdateStats};
pub use buffer::{normalize_advantages, Phase, RolloutBuffer, Sample, StepRecord};
pub use config::PpoConfig;
pub use gae::compute_gae;
pub use loss::{clipped_surrogate, ppo_loss, LossOutput};
pub use rollout::{collect_rollout, next_observation, EpisodeSummary, VecEnv};
