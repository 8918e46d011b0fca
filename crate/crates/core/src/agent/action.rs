use serde::{Deserialize, Serialize};

use super::reward::RewardConfig;

/// Scaled order volume and scaled price margin, each in [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub scaled_volume: f64,
    pub scaled_margin: f64,
}

impl Action {
    pub fn new(scaled_volume: f64, scaled_margin: f64) -> Self {
        Action {
            scaled_volume: scaled_volume.clamp(-1.0, 1.0),
            scaled_margin: scaled_margin.clamp(-1.0, 1.0),
        }
    }
}

/// Converts an action into `(signed_volume, price)`.
///
/// Volume is `ceil(max_volume * v)`; zero volume means no order. The price moves away
/// from the mid by `max_margin * margin` in the agent's favour (below the mid for buys,
/// above for sells) and is rounded to the nearest tick.
pub fn decode_action(a: Action, mid: f64, cfg: &RewardConfig, tick: f64) -> Option<(i64, f64)> {
    let a = Action::new(a.scaled_volume, a.scaled_margin);
    // tolerance keeps exact products such as 5 * 0.2 from rounding up a whole unit
    let volume = (cfg.max_volume as f64 * a.scaled_volume - 1e-9).ceil() as i64;
    if volume == 0 {
        return None;
    }
    let direction = a.scaled_volume.signum();
    let raw = mid - cfg.max_margin * direction * a.scaled_margin * mid;
    let price = ((raw / tick).round().max(1.0)) * tick;
    Some((volume, price))
}
