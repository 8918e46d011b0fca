//! Diagonal Gaussian squashed through tanh.

use std::f64::consts::{LN_2, PI};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::agent::Action;

pub const ACTION_DIM: usize = 2;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// `log(1 - tanh(u)^2)`, evaluated without cancellation for large `|u|`.
pub fn log_one_minus_tanh_sq(u: f64) -> f64 {
    2.0 * (LN_2 - u.abs() - (-2.0 * u.abs()).exp().ln_1p())
}

/// Log-density of the pre-squash Gaussian at `raw`.
pub fn gaussian_logprob(raw: &[f64; ACTION_DIM], mean: &[f64; ACTION_DIM], log_std: &[f64; ACTION_DIM]) -> f64 {
    (0..ACTION_DIM)
        .map(|d| {
            let z = (raw[d] - mean[d]) / log_std[d].exp();
            -0.5 * z * z - log_std[d] - HALF_LN_2PI
        })
        .sum()
}

/// Log-density of the squashed action `tanh(raw)`.
pub fn squashed_logprob(raw: &[f64; ACTION_DIM], mean: &[f64; ACTION_DIM], log_std: &[f64; ACTION_DIM]) -> f64 {
    gaussian_logprob(raw, mean, log_std) - raw.iter().map(|&u| log_one_minus_tanh_sq(u)).sum::<f64>()
}

/// Entropy of the pre-squash Gaussian.
pub fn gaussian_entropy(log_std: &[f64; ACTION_DIM]) -> f64 {
    log_std.iter().map(|ls| ls + 0.5 * (1.0 + (2.0 * PI).ln())).sum()
}

/// One draw from the policy head.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledAction {
    /// Pre-squash Gaussian sample.
    pub raw: [f64; ACTION_DIM],
    pub action: Action,
    pub logprob: f64,
}

pub fn sample_action<R: Rng + ?Sized>(mean: &[f64; ACTION_DIM], std: &[f64; ACTION_DIM], rng: &mut R) -> SampledAction {
    let mut raw = [0.0; ACTION_DIM];
    for d in 0..ACTION_DIM {
        let z: f64 = StandardNormal.sample(rng);
        raw[d] = mean[d] + std[d] * z;
    }
    let log_std = [std[0].ln(), std[1].ln()];
    SampledAction {
        raw,
        action: Action::new(raw[0].tanh(), raw[1].tanh()),
        logprob: squashed_logprob(&raw, mean, &log_std),
    }
}

/// Deterministic action at the distribution's centre.
pub fn mean_action(mean: &[f64; ACTION_DIM]) -> Action {
    Action::new(mean[0].tanh(), mean[1].tanh())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stable_log_jacobian() {
        for u in [-30.0, -3.0, -0.2, 0.0, 0.5, 4.0, 25.0] {
            let direct = (1.0 - f64::tanh(u).powi(2)).ln();
            if direct.is_finite() && u.abs() < 10.0 {
                assert!((log_one_minus_tanh_sq(u) - direct).abs() < 1e-10);
            }
            assert!(log_one_minus_tanh_sq(u).is_finite());
        }
    }

    #[test]
    fn tiny_std_collapses_to_tanh_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mean = [0.3, -1.2];
        let s = sample_action(&mean, &[1e-12, 1e-12], &mut rng);
        assert!((s.action.scaled_volume - 0.3f64.tanh()).abs() < 1e-10);
        assert!((s.action.scaled_margin - (-1.2f64).tanh()).abs() < 1e-10);
    }

    #[test]
    fn logprob_matches_density_at_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mean = [0.2, -0.4];
        let std = [0.7, 1.3];
        for _ in 0..100 {
            let s = sample_action(&mean, &std, &mut rng);
            let a = [s.action.scaled_volume, s.action.scaled_margin];
            let density: f64 = (0..2)
                .map(|d| {
                    let u = a[d].atanh();
                    let z = (u - mean[d]) / std[d];
                    (-0.5 * z * z).exp() / (std[d] * (2.0 * PI).sqrt()) / (1.0 - a[d] * a[d])
                })
                .product();
            if density.is_finite() && density > 1e-8 {
                assert!((s.logprob - density.ln()).abs() < 1e-6, "{} vs {}", s.logprob, density.ln());
            }
        }
    }
}
