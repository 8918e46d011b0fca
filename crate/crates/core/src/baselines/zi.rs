use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZiParams {
    /// Std of the log offset of the limit price from the mid.
    pub spread_scale: f64,
}

impl Default for ZiParams {
    fn default() -> Self {
        ZiParams { spread_scale: 0.005 }
    }
}

/// A random unit buy or sell with a log-normal price around the mid.
pub fn zi_order<R: Rng + ?Sized>(rng: &mut R, mid: f64, spread_scale: f64) -> (i64, f64) {
    let volume = if rng.random_bool(0.5) { 1 } else { -1 };
    let price = if spread_scale > 0.0 {
        mid * Normal::new(0.0, spread_scale).expect("finite scale").sample(rng).exp()
    } else {
        mid
    };
    (volume, price)
}
