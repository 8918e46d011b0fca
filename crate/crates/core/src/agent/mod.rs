//! Agent traits, observations, order decoding and rewards.

mod action;
mod observation;
mod returns;
mod reward;
mod settlement;
mod traits;

pub use action::{decode_action, Action};
pub use observation::{
    blurred_fundamental_return, build_observation, clamped_ratio, interval_stats, MarketView, Observation, OBS_DIM,
    OBS_NAMES,
};
pub use returns::{log_return, realized_volatility};
pub use reward::{illiquidity, reward, utility, DeviationTracker, RewardConfig, RewardInputs};
pub use settlement::settle_trades;
pub use traits::{sample_traits, AgentState, AgentTraits, TraitPriors};
