//! Generalized advantage estimation over one agent's buffer, discounted with the
//! agent's own discount factor.

use super::buffer::RolloutBuffer;
use super::params::{value, PolicyParams};
use crate::error::PolicyError;

#[derive(Debug, Clone, PartialEq)]
pub struct Advantages {
    /// Advantages before normalisation.
    pub raw: Vec<f64>,
    /// Zero-mean, unit-std advantages used by the surrogate.
    pub normalized: Vec<f64>,
    /// Critic regression targets (`raw + V`).
    pub returns: Vec<f64>,
}

/// Backward GAE recursion. `breaks[k]` stops the recursion between `k` and `k + 1`;
/// every step bootstraps from `next_values[k]` since episodes are truncated, not terminal.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    next_values: &[f64],
    breaks: &[bool],
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut running = 0.0;
    for k in (0..n).rev() {
        if breaks[k] {
            running = 0.0;
        }
        let delta = rewards[k] + gamma * next_values[k] - values[k];
        running = delta + gamma * lambda * running;
        adv[k] = running;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

pub fn normalize(xs: &[f64]) -> Vec<f64> {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < 1e-8 {
        xs.iter().map(|x| x - mean).collect()
    } else {
        xs.iter().map(|x| (x - mean) / std).collect()
    }
}

pub fn compute_advantages(
    buffer: &RolloutBuffer,
    params: &PolicyParams,
    gamma: f64,
    lambda: f64,
) -> Result<Advantages, PolicyError> {
    if buffer.is_empty() {
        return Err(PolicyError::EmptyBuffer);
    }
    let ts = buffer.transitions();
    let rewards: Vec<f64> = ts.iter().map(|t| t.reward).collect();
    let values: Vec<f64> = ts.iter().map(|t| value(params, &t.input_prev)).collect();
    let next_values: Vec<f64> = ts.iter().map(|t| value(params, &t.input_next)).collect();
    let breaks: Vec<bool> = ts.iter().map(|t| t.episode_end).collect();
    let (raw, returns) = gae(&rewards, &values, &next_values, &breaks, gamma, lambda);
    Ok(Advantages { normalized: normalize(&raw), raw, returns })
}
