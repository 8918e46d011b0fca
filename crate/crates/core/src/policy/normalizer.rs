use serde::{Deserialize, Serialize};

use crate::agent::OBS_DIM;

const CLIP: f64 = 10.0;
const EPS: f64 = 1e-8;

/// Running per-component mean and variance of raw observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsNormalizer {
    pub count: f64,
    pub mean: [f64; OBS_DIM],
    /// Sum of squared deviations (Welford's M2).
    pub m2: [f64; OBS_DIM],
}

impl Default for ObsNormalizer {
    fn default() -> Self {
        ObsNormalizer { count: 0.0, mean: [0.0; OBS_DIM], m2: [0.0; OBS_DIM] }
    }
}

impl ObsNormalizer {
    pub fn update(&mut self, x: &[f64; OBS_DIM]) {
        self.count += 1.0;
        for k in 0..OBS_DIM {
            let d = x[k] - self.mean[k];
            self.mean[k] += d / self.count;
            self.m2[k] += d * (x[k] - self.mean[k]);
        }
    }

    pub fn variance(&self) -> [f64; OBS_DIM] {
        if self.count < 2.0 {
            [1.0; OBS_DIM]
        } else {
            self.m2.map(|m| m / self.count)
        }
    }

    pub fn normalize(&self, x: &[f64; OBS_DIM]) -> [f64; OBS_DIM] {
        if self.count == 0.0 {
            return x.map(|v| v.clamp(-CLIP, CLIP));
        }
        let var = self.variance();
        std::array::from_fn(|k| ((x[k] - self.mean[k]) / (var[k] + EPS).sqrt()).clamp(-CLIP, CLIP))
    }
}
