//! Shared actor-critic policy, rollout storage, PPO and the training loop.

pub mod checkpoint;
mod buffer;
mod distribution;
mod gae;
mod network;
mod normalizer;
mod params;
pub mod ppo;

pub use buffer::{RolloutBuffer, Transition};
pub use checkpoint::Checkpoint;
pub use distribution::{
    gaussian_entropy, gaussian_logprob, log_one_minus_tanh_sq, mean_action, sample_action, squashed_logprob,
    SampledAction, ACTION_DIM,
};
pub use gae::{compute_advantages, gae, normalize, Advantages};
pub use network::{orthogonal_matrix, ForwardCache, Mlp};
pub use normalizer::ObsNormalizer;
pub use params::{hidden_activations, init_params, policy_forward, value, PolicyParams, LOG_STD_MAX, LOG_STD_MIN};
pub use ppo::{
    actor_loss_and_grad, critic_loss_and_grad, ppo_update, OptimizerKind, PpoConfig, PpoOptimizers, Sample,
    UpdateStats,
};
pub mod train;
pub use train::{train, write_train_log, FrozenPolicy, StopReason, TrainLogRow, TrainOptions, TrainOutcome};
