//! Limit-order-book market simulation with heterogeneous agents that share one
//! PPO-trained policy, baseline traders, stylized-fact statistics and
//! optimal-transport calibration of trait priors.

pub mod agent;
pub mod baselines;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod market;
pub mod ot;
pub mod policy;
pub mod sim;
pub mod stylized;

pub use error::{Error, ModelError, PolicyError, Result};
