use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Strategy weights and horizon of one fundamentalist-chartist-noise trader.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FcnParams {
    pub w_fundamental: f64,
    pub w_chartist: f64,
    pub w_noise: f64,
    /// Forecast horizon in steps.
    pub horizon: usize,
    /// Std of the noise forecast (per-step log return).
    pub noise_scale: f64,
}

impl FcnParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let w = [self.w_fundamental, self.w_chartist, self.w_noise];
        if w.iter().any(|&x| !(x >= 0.0)) || w.iter().sum::<f64>() <= 0.0 {
            return Err(ModelError::InvalidParameter {
                name: "fcn weights",
                reason: "must be nonnegative with a positive sum".into(),
            });
        }
        if self.horizon == 0 || !(self.noise_scale >= 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "horizon",
                reason: "horizon must be >= 1 and noise_scale >= 0".into(),
            });
        }
        Ok(())
    }
}

/// Population priors: log-normal weights around the given means, uniform horizons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FcnPriors {
    pub w_fundamental_mean: f64,
    pub w_chartist_mean: f64,
    pub w_noise_mean: f64,
    /// Log-space std of each weight draw.
    pub weight_log_std: f64,
    pub horizon_min: usize,
    pub horizon_max: usize,
    pub noise_scale: f64,
    /// Own-order events in the adaptive error window.
    pub adaptive_window: usize,
}

impl Default for FcnPriors {
    fn default() -> Self {
        FcnPriors {
            w_fundamental_mean: 1.0,
            w_chartist_mean: 1.0,
            w_noise_mean: 1.0,
            weight_log_std: 0.5,
            horizon_min: 20,
            horizon_max: 200,
            noise_scale: 1e-3,
            adaptive_window: 50,
        }
    }
}

impl FcnPriors {
    pub fn validate(&self) -> Result<(), ModelError> {
        let means = [self.w_fundamental_mean, self.w_chartist_mean, self.w_noise_mean];
        if means.iter().any(|&m| !(m >= 0.0)) || means.iter().sum::<f64>() <= 0.0 || !(self.weight_log_std >= 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "fcn priors",
                reason: "weight means must be >= 0 with a positive sum, log std >= 0".into(),
            });
        }
        if self.horizon_min == 0 || self.horizon_min > self.horizon_max || self.adaptive_window == 0 {
            return Err(ModelError::InvalidParameter {
                name: "horizon_min",
                reason: "need 1 <= horizon_min <= horizon_max and adaptive_window >= 1".into(),
            });
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FcnParams {
        let mut draw = |mean: f64| {
            if mean == 0.0 || self.weight_log_std == 0.0 {
                mean
            } else {
                mean * LogNormal::new(0.0, self.weight_log_std).expect("validated").sample(rng)
            }
        };
        let (w_fundamental, w_chartist, w_noise) =
            (draw(self.w_fundamental_mean), draw(self.w_chartist_mean), draw(self.w_noise_mean));
        FcnParams {
            w_fundamental,
            w_chartist,
            w_noise,
            horizon: rng.random_range(self.horizon_min..=self.horizon_max),
            noise_scale: self.noise_scale,
        }
    }
}

/// Mean per-step log return over the last `horizon` steps ending at `t_now`.
pub fn chartist_return(mids: &[f64], t_now: usize, horizon: usize) -> Result<f64, ModelError> {
    if t_now < horizon || t_now >= mids.len() {
        return Err(ModelError::InsufficientData { needed: horizon + 1, have: t_now.min(mids.len()) + 1 });
    }
    Ok((mids[t_now] / mids[t_now - horizon]).ln() / horizon as f64)
}

/// Weighted-average expected per-step log return given a noise draw `eps`.
pub fn fcn_forecast(params: &FcnParams, fundamental: f64, mid: f64, chartist: f64, eps: f64) -> f64 {
    let total = params.w_fundamental + params.w_chartist + params.w_noise;
    (params.w_fundamental * (fundamental / mid).ln() / params.horizon as f64
        + params.w_chartist * chartist
        + params.w_noise * eps)
        / total
}

/// Turns an expected return into a unit order priced between the mid and the forecast
/// price: a buy when the forecast is above the mid, a sell when below, nothing if equal.
pub fn order_from_forecast<R: Rng + ?Sized>(expected: f64, horizon: usize, mid: f64, rng: &mut R) -> Option<(i64, f64)> {
    let target = mid * (expected * horizon as f64).exp();
    if target == mid || !target.is_finite() {
        return None;
    }
    let u: f64 = rng.random();
    let price = mid + u * (target - mid);
    Some((if target > mid { 1 } else { -1 }, price))
}

/// One FCN order at step `t_now`.
pub fn fcn_order<R: Rng + ?Sized>(
    params: &FcnParams,
    mids: &[f64],
    t_now: usize,
    fundamental: f64,
    rng: &mut R,
) -> Result<Option<(i64, f64)>, ModelError> {
    let chartist = chartist_return(mids, t_now, params.horizon)?;
    let eps = if params.noise_scale > 0.0 {
        Normal::new(0.0, params.noise_scale).expect("validated").sample(rng)
    } else {
        0.0
    };
    let expected = fcn_forecast(params, fundamental, mids[t_now], chartist, eps);
    Ok(order_from_forecast(expected, params.horizon, mids[t_now], rng))
}
