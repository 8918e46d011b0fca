use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::returns::{log_return, realized_volatility};
use super::reward::RewardConfig;
use super::traits::{AgentState, AgentTraits};
use crate::error::ModelError;

pub const OBS_DIM: usize = 11;

/// Column names, in observation order.
pub const OBS_NAMES: [&str; OBS_DIM] = [
    "holding_asset_ratio",
    "asset_to_max_order_ratio",
    "inverted_buying_power",
    "return",
    "volatility",
    "asset_to_buy_depth",
    "asset_to_sell_depth",
    "blurred_fundamental_return",
    "uninformedness",
    "risk_aversion",
    "discount_factor",
];

/// Policy input vector. Component order follows [`OBS_NAMES`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation(pub [f64; OBS_DIM]);

impl Observation {
    pub const HOLDING_ASSET_RATIO: usize = 0;
    pub const ASSET_TO_MAX_ORDER: usize = 1;
    pub const INVERTED_BUYING_POWER: usize = 2;
    pub const RETURN: usize = 3;
    pub const VOLATILITY: usize = 4;
    pub const ASSET_TO_BUY_DEPTH: usize = 5;
    pub const ASSET_TO_SELL_DEPTH: usize = 6;
    pub const BLURRED_FUNDAMENTAL_RETURN: usize = 7;
    pub const UNINFORMEDNESS: usize = 8;
    pub const RISK_AVERSION: usize = 9;
    pub const DISCOUNT_FACTOR: usize = 10;

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// What an agent can see of the market at its order event.
#[derive(Debug, Clone, Copy)]
pub struct MarketView<'a> {
    /// Mid price per step; `mids[t]` is the mid at step `t`, `mids[0]` the opening price.
    pub mids: &'a [f64],
    pub t_now: usize,
    pub fundamental: f64,
    /// Depth-weighted resting buy volume near the mid.
    pub buy_depth: f64,
    pub sell_depth: f64,
}

impl MarketView<'_> {
    pub fn mid(&self) -> f64 {
        self.mids[self.t_now]
    }
}

/// `num / den`, bounded by `cap` in magnitude; a vanishing denominator maps to `±cap`
/// (or 0 when the numerator is also 0).
pub fn clamped_ratio(num: f64, den: f64, cap: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            cap.copysign(num)
        }
    } else {
        (num / den).clamp(-cap, cap)
    }
}

/// Fundamental log return seen through Gaussian noise of scale `sigma`.
pub fn blurred_fundamental_return<R: Rng + ?Sized>(fundamental: f64, mid: f64, sigma: f64, rng: &mut R) -> f64 {
    let truth = (fundamental / mid).ln();
    if sigma > 0.0 {
        truth + Normal::new(0.0, sigma).expect("sigma >= 0").sample(rng)
    } else {
        truth
    }
}

/// Return and volatility over the agent's last inter-order interval, both computed
/// from the recorded mid series.
pub fn interval_stats(view: &MarketView<'_>, t_prev: usize) -> Result<(f64, f64), ModelError> {
    Ok((
        log_return(view.mids, t_prev, view.t_now)?,
        realized_volatility(view.mids, t_prev, view.t_now)?,
    ))
}

pub fn build_observation<R: Rng + ?Sized>(
    traits: &AgentTraits,
    state: &AgentState,
    view: &MarketView<'_>,
    cfg: &RewardConfig,
    rng: &mut R,
) -> Result<Observation, ModelError> {
    let cap = cfg.observation_cap;
    let mid = view.mid();
    let w = state.position as f64;
    let wealth = state.wealth(mid);
    let (ret, vol) = interval_stats(view, state.last_order_step as usize)?;
    let mut o = [0.0; OBS_DIM];
    o[Observation::HOLDING_ASSET_RATIO] = clamped_ratio(w * mid, wealth, cap);
    o[Observation::ASSET_TO_MAX_ORDER] = (w / cfg.max_volume as f64).clamp(-cap, cap);
    o[Observation::INVERTED_BUYING_POWER] = clamped_ratio(mid, state.cash, cap);
    o[Observation::RETURN] = ret;
    o[Observation::VOLATILITY] = vol;
    o[Observation::ASSET_TO_BUY_DEPTH] = clamped_ratio(w.abs(), view.buy_depth, cap);
    o[Observation::ASSET_TO_SELL_DEPTH] = clamped_ratio(w.abs(), view.sell_depth, cap);
    o[Observation::BLURRED_FUNDAMENTAL_RETURN] =
        blurred_fundamental_return(view.fundamental, mid, traits.sigma, rng);
    o[Observation::UNINFORMEDNESS] = traits.sigma;
    o[Observation::RISK_AVERSION] = traits.alpha;
    o[Observation::DISCOUNT_FACTOR] = traits.gamma;
    Ok(Observation(o))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn traits() -> AgentTraits {
        AgentTraits { sigma: 0.0, alpha: 2.5, gamma: 0.93 }
    }

    fn view(mids: &[f64]) -> MarketView<'_> {
        MarketView { mids, t_now: mids.len() - 1, fundamental: 100.0, buy_depth: 4.0, sell_depth: 2.0 }
    }

    #[test]
    fn flat_position_zeroes_position_terms() {
        let mids = [100.0, 101.0, 100.0];
        let state = AgentState::new(0, 500.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let o = build_observation(&traits(), &state, &view(&mids), &RewardConfig::default(), &mut rng).unwrap();
        for i in [0, 1, 5, 6] {
            assert_eq!(o.0[i], 0.0);
        }
    }

    #[test]
    fn vanishing_cash_hits_cap() {
        let mids = [100.0, 100.0];
        let state = AgentState::new(1, 0.0);
        let cfg = RewardConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let o = build_observation(&traits(), &state, &view(&mids), &cfg, &mut rng).unwrap();
        assert_eq!(o.0[Observation::INVERTED_BUYING_POWER], cfg.observation_cap);
        let tiny = AgentState::new(1, 1e-12);
        let o = build_observation(&traits(), &tiny, &view(&mids), &cfg, &mut rng).unwrap();
        assert_eq!(o.0[Observation::INVERTED_BUYING_POWER], cfg.observation_cap);
        assert!(o.is_finite());
    }

    #[test]
    fn holding_ratio_uses_total_wealth() {
        let mids = [100.0, 100.0];
        let state = AgentState::new(10, 1000.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let o = build_observation(&traits(), &state, &view(&mids), &RewardConfig::default(), &mut rng).unwrap();
        assert_eq!(state.wealth(100.0), 2000.0);
        assert_eq!(o.0[Observation::HOLDING_ASSET_RATIO], 0.5);
        assert_eq!(o.0[Observation::ASSET_TO_MAX_ORDER], 2.0);
        assert_eq!(o.0[Observation::ASSET_TO_BUY_DEPTH], 2.5);
        assert_eq!(o.0[Observation::ASSET_TO_SELL_DEPTH], 5.0);
    }

    #[test]
    fn traits_pass_through_bit_for_bit() {
        let t = AgentTraits { sigma: 0.0123456789, alpha: -0.3333333, gamma: 0.987654321 };
        let mids = [100.0, 100.5, 99.5];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let o = build_observation(&t, &AgentState::new(3, 50.0), &view(&mids), &RewardConfig::default(), &mut rng).unwrap();
        assert_eq!(o.0[8].to_bits(), t.sigma.to_bits());
        assert_eq!(o.0[9].to_bits(), t.alpha.to_bits());
        assert_eq!(o.0[10].to_bits(), t.gamma.to_bits());
    }

    #[test]
    fn noiseless_blur_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(blurred_fundamental_return(110.0, 100.0, 0.0, &mut rng), 1.1f64.ln());
        assert_eq!(blurred_fundamental_return(100.0, 100.0, 0.0, &mut rng), 0.0);
    }

    #[test]
    fn blur_noise_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let truth = (105.0f64 / 100.0).ln();
        let n = 100_000;
        let errs: Vec<f64> = (0..n).map(|_| blurred_fundamental_return(105.0, 100.0, 0.05, &mut rng) - truth).collect();
        let mean = errs.iter().sum::<f64>() / n as f64;
        let sd = (errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
        assert!((sd / 0.05 - 1.0).abs() < 0.02, "sd {sd}");
    }

    #[test]
    fn first_event_interval_starts_at_zero() {
        let mids = [100.0, 100.0, 110.0];
        let state = AgentState::new(0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let o = build_observation(&traits(), &state, &view(&mids), &RewardConfig::default(), &mut rng).unwrap();
        assert!((o.0[Observation::RETURN] - 0.5 * 1.1f64.ln()).abs() < 1e-15);
    }
}
