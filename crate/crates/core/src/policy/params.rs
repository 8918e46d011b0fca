use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::distribution::ACTION_DIM;
use super::network::Mlp;
use crate::agent::OBS_DIM;
use crate::error::PolicyError;

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 1.0;

const HIDDEN_GAIN: f64 = std::f64::consts::SQRT_2;
const POLICY_HEAD_GAIN: f64 = 0.01;
const VALUE_HEAD_GAIN: f64 = 1.0;

/// Shared actor-critic parameters: two tanh hidden layers each, a Gaussian mean head
/// with a state-independent log-std, and a scalar value head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub actor: Mlp,
    pub log_std: [f64; ACTION_DIM],
    pub critic: Mlp,
}

impl PolicyParams {
    pub fn hidden_width(&self) -> usize {
        self.actor.sizes()[1]
    }

    pub fn zeros(hidden: usize) -> Self {
        PolicyParams {
            actor: Mlp::zeros(&[OBS_DIM, hidden, hidden, ACTION_DIM]),
            log_std: [0.0; ACTION_DIM],
            critic: Mlp::zeros(&[OBS_DIM, hidden, hidden, 1]),
        }
    }

    /// Clamped log-std actually used by the policy.
    pub fn effective_log_std(&self) -> [f64; ACTION_DIM] {
        self.log_std.map(|l| l.clamp(LOG_STD_MIN, LOG_STD_MAX))
    }

    /// Actor parameters followed by the log-std, as the optimiser sees them.
    pub fn actor_flat(&self) -> Vec<f64> {
        let mut v = self.actor.params().to_vec();
        v.extend_from_slice(&self.log_std);
        v
    }

    pub fn set_actor_flat(&mut self, flat: &[f64]) {
        let n = self.actor.params().len();
        self.actor.params_mut().copy_from_slice(&flat[..n]);
        self.log_std.copy_from_slice(&flat[n..n + ACTION_DIM]);
    }

    pub fn is_finite(&self) -> bool {
        self.actor.params().iter().chain(&self.log_std).chain(self.critic.params()).all(|v| v.is_finite())
    }
}

/// Orthogonally initialised parameters.
pub fn init_params(hidden_width: usize, seed: u64) -> PolicyParams {
    assert!(hidden_width >= 1, "hidden width must be >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = hidden_width;
    PolicyParams {
        actor: Mlp::orthogonal(&[OBS_DIM, h, h, ACTION_DIM], &[HIDDEN_GAIN, HIDDEN_GAIN, POLICY_HEAD_GAIN], &mut rng),
        log_std: [0.0; ACTION_DIM],
        critic: Mlp::orthogonal(&[OBS_DIM, h, h, 1], &[HIDDEN_GAIN, HIDDEN_GAIN, VALUE_HEAD_GAIN], &mut rng),
    }
}

/// Mean and std of the pre-squash action distribution.
pub fn policy_forward(params: &PolicyParams, input: &[f64; OBS_DIM]) -> ([f64; ACTION_DIM], [f64; ACTION_DIM]) {
    let out = params.actor.forward(input);
    let std = params.effective_log_std().map(f64::exp);
    ([out[0], out[1]], std)
}

pub fn value(params: &PolicyParams, input: &[f64; OBS_DIM]) -> f64 {
    params.critic.forward(input)[0]
}

/// Post-tanh activations of actor hidden layer 1 or 2, one row per input.
pub fn hidden_activations(
    params: &PolicyParams,
    inputs: &[[f64; OBS_DIM]],
    layer: usize,
) -> Result<Vec<Vec<f64>>, PolicyError> {
    if !(layer == 1 || layer == 2) {
        return Err(PolicyError::InvalidLayer(layer));
    }
    Ok(inputs.iter().map(|x| params.actor.hidden(x, layer)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn seeded_init_repeats() {
        assert_eq!(init_params(8, 3), init_params(8, 3));
        assert_ne!(init_params(8, 3), init_params(8, 4));
    }

    #[test]
    fn init_biases_zero() {
        let p = init_params(6, 0);
        for l in 0..3 {
            assert!(p.actor.layer(l).1.iter().all(|&b| b == 0.0));
            assert!(p.critic.layer(l).1.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn zero_weights_give_unit_std_and_zero_mean() {
        let p = PolicyParams::zeros(4);
        let (mean, std) = policy_forward(&p, &[0.5; OBS_DIM]);
        assert_eq!(mean, [0.0, 0.0]);
        assert_eq!(std, [1.0, 1.0]);
        let h = hidden_activations(&p, &[[1.0; OBS_DIM]], 1).unwrap();
        assert!(h[0].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn log_std_is_bounded() {
        let mut p = PolicyParams::zeros(4);
        p.log_std = [-40.0, 7.0];
        let (_, std) = policy_forward(&p, &[0.0; OBS_DIM]);
        assert_eq!(std, [LOG_STD_MIN.exp(), LOG_STD_MAX.exp()]);
    }

    #[test]
    fn forward_is_pure_and_lipschitz() {
        let p = init_params(16, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x: [f64; OBS_DIM] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
        assert_eq!(policy_forward(&p, &x), policy_forward(&p, &x));
        let delta = 1e-6;
        let lip = p.actor.lipschitz_bound();
        for k in 0..OBS_DIM {
            let mut y = x;
            y[k] += delta;
            let (a, _) = policy_forward(&p, &x);
            let (b, _) = policy_forward(&p, &y);
            let change = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            assert!(change <= lip * delta * (1.0 + 1e-9), "{change} > {}", lip * delta);
        }
    }

    #[test]
    fn invalid_layer_rejected() {
        let p = PolicyParams::zeros(2);
        assert!(matches!(hidden_activations(&p, &[[0.0; OBS_DIM]], 3), Err(PolicyError::InvalidLayer(3))));
        assert!(hidden_activations(&p, &[[0.0; OBS_DIM]], 0).is_err());
    }

    #[test]
    fn activations_bounded_and_rowwise_pure() {
        let p = init_params(32, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let xs: Vec<[f64; OBS_DIM]> =
            (0..200).map(|_| std::array::from_fn(|_| rng.random_range(-50.0..50.0))).collect();
        for layer in [1, 2] {
            let h = hidden_activations(&p, &xs, layer).unwrap();
            assert!(h.iter().flatten().all(|v| v.abs() <= 1.0));
        }
        let same = hidden_activations(&p, &[xs[0], xs[0]], 2).unwrap();
        assert_eq!(same[0], same[1]);
    }
}
