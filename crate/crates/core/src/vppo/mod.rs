//! Vote-based PPO scheduler.
//!
//! The actor maps a stacked AoI observation to `2M` Gaussian votes, one
//! sampling and one update vote per device. Votes are decoded into a
//! feasible schedule by per-relay top-`L` and global top-`K` selection, so
//! the policy's output never depends on the number of joint schedules.

mod decode;
pub mod loss;
mod policy;
pub mod train;
mod transfer;

pub use decode::decode_votes;
pub use loss::{
    clipped_surrogate, compute_advantages, ppo_loss, Experience, LossConfig, LossOutput,
};
pub use policy::{PolicyParams, VppoScheduler, ACTOR_HEAD_GAIN, CRITIC_HEAD_GAIN, INITIAL_LOG_STD};
pub use train::{
    train, CheckpointSink, IterationLog, Rollout, TrainConfig, TrainOutcome, Trainer,
    TRAINING_LOG_HEADER,
};
pub use transfer::{transfer_init, TransferMode};
