//! Utility, illiquidity and fundamental-deviation terms, combined into the
//! per-order reward.

use std::f64::consts::FRAC_2_PI;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Reward weights plus the market-view parameters the observation and reward share.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    pub beta_short: f64,
    pub beta_cash: f64,
    pub beta_illiquidity: f64,
    pub beta_fundamental: f64,
    /// Scale inside the arctan utility.
    pub utility_scale: f64,
    /// Weight of the buy/sell depth imbalance in the illiquidity term.
    pub imbalance_scale: f64,
    pub buy_decay: f64,
    pub sell_decay: f64,
    /// Relative price range around the mid used for depth.
    pub depth_range: f64,
    pub max_volume: u32,
    /// Largest relative distance of an order price from the mid.
    pub max_margin: f64,
    /// Bound applied to observation ratios whose denominator vanishes.
    pub observation_cap: f64,
    pub illiquidity_cap: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            beta_short: 0.5,
            beta_cash: 0.5,
            beta_illiquidity: 0.01,
            beta_fundamental: 1.0,
            utility_scale: 1e-4,
            imbalance_scale: 0.1,
            buy_decay: 10.0,
            sell_decay: 10.0,
            depth_range: 0.05,
            max_volume: 5,
            max_margin: 0.01,
            observation_cap: 1e6,
            illiquidity_cap: 1e4,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let nonneg = [
            ("beta_short", self.beta_short),
            ("beta_cash", self.beta_cash),
            ("beta_illiquidity", self.beta_illiquidity),
            ("beta_fundamental", self.beta_fundamental),
            ("utility_scale", self.utility_scale),
            ("imbalance_scale", self.imbalance_scale),
            ("buy_decay", self.buy_decay),
            ("sell_decay", self.sell_decay),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ModelError::InvalidParameter { name, reason: format!("must be >= 0, got {v}") });
            }
        }
        if !(self.depth_range.is_finite() && self.depth_range > 0.0) {
            return Err(ModelError::InvalidParameter { name: "depth_range", reason: "must be > 0".into() });
        }
        if self.max_volume < 1 {
            return Err(ModelError::InvalidParameter { name: "max_volume", reason: "must be >= 1".into() });
        }
        if !(self.max_margin > 0.0 && self.max_margin < 1.0) {
            return Err(ModelError::InvalidParameter { name: "max_margin", reason: "must lie in (0, 1)".into() });
        }
        if !(self.observation_cap > 0.0 && self.illiquidity_cap > 0.0) {
            return Err(ModelError::InvalidParameter { name: "observation_cap", reason: "caps must be > 0".into() });
        }
        Ok(())
    }
}

/// CARA-style utility squashed into (-1, 1).
pub fn utility(wealth: f64, ret: f64, position: i64, mid: f64, volatility: f64, alpha: f64, scale: f64) -> f64 {
    let exposure = position as f64 * mid;
    let inner = wealth + ret * exposure - 0.5 * alpha * volatility * exposure.abs();
    FRAC_2_PI * (scale * inner).atan()
}

/// Depth-based illiquidity; `cap` replaces the value whenever a side is empty or the
/// result exceeds it.
pub fn illiquidity(buy_depth: f64, sell_depth: f64, imbalance_scale: f64, cap: f64) -> f64 {
    if buy_depth <= 0.0 || sell_depth <= 0.0 {
        return cap;
    }
    let imbalance = buy_depth.max(sell_depth) / buy_depth.min(sell_depth) - 1.0;
    (1.0 / buy_depth + 1.0 / sell_depth + imbalance_scale * imbalance).min(cap)
}

/// Tracks the current same-sign run of `log(p_f / p_mid)` and evaluates the
/// harmonically weighted deviation over it.
#[derive(Debug, Clone, Default)]
pub struct DeviationTracker {
    current_sign: i8,
    run_start: u64,
    last_step: u64,
    /// `|log(p_f/p_mid)|` for each step of the current run, oldest first.
    run: Vec<f64>,
}

impl DeviationTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn current_sign(&self) -> i8 {
        self.current_sign
    }

    /// Last step whose sign differed from the current run (the run covers `(run_start, t]`).
    pub fn run_start(&self) -> u64 {
        self.run_start
    }

    /// Feeds step `t` and returns the deviation penalty for it.
    pub fn update(&mut self, fundamental: f64, mid: f64, t: u64) -> f64 {
        let d = (fundamental / mid).ln();
        let sign: i8 = if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            0
        };
        if sign == 0 || sign != self.current_sign {
            self.run.clear();
            self.run_start = t.saturating_sub(1);
        }
        self.current_sign = sign;
        self.last_step = t;
        if sign != 0 {
            self.run.push(d.abs());
        }
        self.value()
    }

    /// Penalty at the most recent step: `sum_k |d_k| / (t + 1 - t_k)`.
    pub fn value(&self) -> f64 {
        let len = self.run.len();
        self.run
            .iter()
            .enumerate()
            .map(|(i, d)| d / (len - i) as f64)
            .sum()
    }
}

/// Everything the reward needs at one order event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardInputs {
    pub utility: f64,
    pub position: i64,
    pub cash: f64,
    pub illiquidity: f64,
    pub fundamental_deviation: f64,
}

pub fn reward(inputs: &RewardInputs, cfg: &RewardConfig) -> f64 {
    let short = if inputs.position < 0 { cfg.beta_short } else { 0.0 };
    let broke = if inputs.cash < 0.0 { cfg.beta_cash } else { 0.0 };
    inputs.utility
        - short
        - broke
        - cfg.beta_illiquidity * inputs.illiquidity
        - cfg.beta_fundamental * inputs.fundamental_deviation
}
