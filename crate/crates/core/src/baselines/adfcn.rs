use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::fcn::{chartist_return, fcn_forecast, order_from_forecast, FcnParams};
use crate::error::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Fundamental,
    Chartist,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Pending {
    step: usize,
    mid: f64,
    fundamental_forecast: f64,
    chartist_forecast: f64,
}

/// Rolling squared forecast errors of the fundamental and chartist components,
/// scored at each of the agent's own order events.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveState {
    window: usize,
    fundamental_errors: VecDeque<f64>,
    chartist_errors: VecDeque<f64>,
    pending: Option<Pending>,
}

impl AdaptiveState {
    pub fn new(window: usize) -> Result<Self, ModelError> {
        if window == 0 {
            return Err(ModelError::InvalidParameter { name: "window", reason: "must be >= 1".into() });
        }
        Ok(AdaptiveState {
            window,
            fundamental_errors: VecDeque::with_capacity(window),
            chartist_errors: VecDeque::with_capacity(window),
            pending: None,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn is_warm(&self) -> bool {
        self.fundamental_errors.len() >= self.window
    }

    /// Strategy with the lower windowed error; `None` until the window is full.
    pub fn selected(&self) -> Option<Strategy> {
        if !self.is_warm() {
            return None;
        }
        let f: f64 = self.fundamental_errors.iter().sum();
        let c: f64 = self.chartist_errors.iter().sum();
        Some(if c < f { Strategy::Chartist } else { Strategy::Fundamental })
    }

    fn score(&mut self, t_now: usize, mid: f64) {
        let Some(p) = self.pending.take() else { return };
        if t_now <= p.step {
            return;
        }
        let realised = (mid / p.mid).ln() / (t_now - p.step) as f64;
        for (errors, forecast) in [
            (&mut self.fundamental_errors, p.fundamental_forecast),
            (&mut self.chartist_errors, p.chartist_forecast),
        ] {
            if errors.len() == self.window {
                errors.pop_front();
            }
            errors.push_back((realised - forecast).powi(2));
        }
    }
}

/// Scores the previous forecasts against the realised return, then places an order
/// with the winning strategy given the combined fundamental and chartist weight. Until
/// the window has filled the agent behaves as a plain FCN trader.
pub fn adfcn_update_and_order<R: Rng + ?Sized>(
    params: &FcnParams,
    adapt: &mut AdaptiveState,
    mids: &[f64],
    t_now: usize,
    fundamental: f64,
    rng: &mut R,
) -> Result<Option<(i64, f64)>, ModelError> {
    let chartist = chartist_return(mids, t_now, params.horizon)?;
    let mid = mids[t_now];
    adapt.score(t_now, mid);
    let fundamental_forecast = (fundamental / mid).ln() / params.horizon as f64;
    adapt.pending = Some(Pending { step: t_now, mid, fundamental_forecast, chartist_forecast: chartist });
    let both = params.w_fundamental + params.w_chartist;
    let effective = match adapt.selected() {
        None => *params,
        Some(Strategy::Fundamental) => FcnParams { w_fundamental: both, w_chartist: 0.0, ..*params },
        Some(Strategy::Chartist) => FcnParams { w_fundamental: 0.0, w_chartist: both, ..*params },
    };
    let eps = if params.noise_scale > 0.0 {
        Normal::new(0.0, params.noise_scale).expect("validated").sample(rng)
    } else {
        0.0
    };
    let expected = fcn_forecast(&effective, fundamental, mid, chartist, eps);
    Ok(order_from_forecast(expected, params.horizon, mid, rng))
}
