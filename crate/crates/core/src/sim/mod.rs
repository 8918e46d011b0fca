//! Episode engine: one market, a population of agents, and a policy driver that
//! answers for the learning agents.

mod bars;
mod engine;

pub use bars::{bar_series, Bars};
pub use engine::{run_episode, Decision, Episode, EventRecord, LearningEvent, PolicyDriver, SimSettings};
