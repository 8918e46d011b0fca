//! Clipped-surrogate PPO update for the shared actor-critic.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::buffer::{RolloutBuffer, Transition};
use super::distribution::{gaussian_entropy, squashed_logprob, ACTION_DIM};
use super::gae::compute_advantages;
use super::network::ForwardCache;
use super::params::{PolicyParams, LOG_STD_MAX, LOG_STD_MIN};
use crate::error::{ModelError, PolicyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub clip_epsilon: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub gae_lambda: f64,
    pub entropy_coef: f64,
    pub grad_clip: f64,
    pub optimizer: OptimizerKind,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            actor_lr: 3e-4,
            critic_lr: 1e-3,
            clip_epsilon: 0.2,
            epochs: 4,
            minibatch: 64,
            gae_lambda: 0.95,
            entropy_coef: 0.0,
            grad_clip: 0.5,
            optimizer: OptimizerKind::Adam,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |name, reason: &str| Err(ModelError::InvalidParameter { name, reason: reason.into() });
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return bad("actor_lr", "learning rates must be > 0");
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return bad("clip_epsilon", "must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda", "must lie in [0, 1]");
        }
        if self.epochs == 0 || self.minibatch == 0 {
            return bad("epochs", "epochs and minibatch must be >= 1");
        }
        if !(self.grad_clip > 0.0) || !(self.entropy_coef >= 0.0) {
            return bad("grad_clip", "grad_clip must be > 0 and entropy_coef >= 0");
        }
        Ok(())
    }
}

/// First-order optimiser state for one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, n: usize) -> Self {
        Optimizer { kind, lr, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        match self.kind {
            OptimizerKind::Sgd => params.iter_mut().zip(grad).for_each(|(p, g)| *p -= self.lr * g),
            OptimizerKind::Adam => {
                const B1: f64 = 0.9;
                const B2: f64 = 0.999;
                const EPS: f64 = 1e-8;
                self.t += 1;
                let c1 = 1.0 - B1.powi(self.t);
                let c2 = 1.0 - B2.powi(self.t);
                for k in 0..params.len() {
                    self.m[k] = B1 * self.m[k] + (1.0 - B1) * grad[k];
                    self.v[k] = B2 * self.v[k] + (1.0 - B2) * grad[k] * grad[k];
                    params[k] -= self.lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + EPS);
                }
            }
        }
    }
}

/// Actor and critic optimisers.
#[derive(Debug, Clone)]
pub struct PpoOptimizers {
    pub actor: Optimizer,
    pub critic: Optimizer,
}

impl PpoOptimizers {
    pub fn new(params: &PolicyParams, cfg: &PpoConfig) -> Self {
        PpoOptimizers {
            actor: Optimizer::new(cfg.optimizer, cfg.actor_lr, params.actor.params().len() + ACTION_DIM),
            critic: Optimizer::new(cfg.optimizer, cfg.critic_lr, params.critic.params().len()),
        }
    }
}

/// Minibatch sample for the losses.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub transition: &'a Transition,
    pub advantage: f64,
    pub target: f64,
}

/// Clipped surrogate (negated) minus the entropy bonus, averaged over the batch, and
/// its gradient with respect to `actor_flat()`.
pub fn actor_loss_and_grad(params: &PolicyParams, batch: &[Sample<'_>], clip: f64, entropy_coef: f64) -> (f64, Vec<f64>) {
    let n_actor = params.actor.params().len();
    let mut grad = vec![0.0; n_actor + ACTION_DIM];
    let log_std = params.effective_log_std();
    let std = log_std.map(f64::exp);
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut cache = ForwardCache::default();
    let mut d_log_std = [0.0; ACTION_DIM];
    for s in batch {
        let t = s.transition;
        params.actor.forward_cached(&t.input_prev, &mut cache);
        let out = cache.output();
        let mean = [out[0], out[1]];
        let logp = squashed_logprob(&t.raw_action, &mean, &log_std);
        let ratio = (logp - t.logprob).exp();
        let clipped = ratio.clamp(1.0 - clip, 1.0 + clip);
        let a = s.advantage;
        let surrogate = (ratio * a).min(clipped * a);
        loss -= surrogate * scale;
        let clip_active = (a >= 0.0 && ratio > 1.0 + clip) || (a < 0.0 && ratio < 1.0 - clip);
        if clip_active {
            continue;
        }
        // d(-ratio * a)/d logp = -ratio * a
        let d_logp = -ratio * a * scale;
        let mut d_mean = [0.0; ACTION_DIM];
        for d in 0..ACTION_DIM {
            let z = (t.raw_action[d] - mean[d]) / std[d];
            d_mean[d] = d_logp * z / std[d];
            d_log_std[d] += d_logp * (z * z - 1.0);
        }
        params.actor.backward(&cache, &d_mean, &mut grad[..n_actor]);
    }
    loss -= entropy_coef * gaussian_entropy(&log_std);
    for d in 0..ACTION_DIM {
        d_log_std[d] -= entropy_coef;
        let inside = params.log_std[d] > LOG_STD_MIN && params.log_std[d] < LOG_STD_MAX;
        grad[n_actor + d] = if inside { d_log_std[d] } else { 0.0 };
    }
    (loss, grad)
}

/// Mean squared error of the critic against the return targets, and its gradient.
pub fn critic_loss_and_grad(params: &PolicyParams, batch: &[Sample<'_>]) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; params.critic.params().len()];
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut cache = ForwardCache::default();
    for s in batch {
        params.critic.forward_cached(&s.transition.input_prev, &mut cache);
        let err = cache.output()[0] - s.target;
        loss += err * err * scale;
        params.critic.backward(&cache, &[2.0 * err * scale], &mut grad);
    }
    (loss, grad)
}

fn clip_norm(grad: &mut [f64], max_norm: f64) {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
}

/// Diagnostics from one update.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub entropy: f64,
    pub mean_reward: f64,
}

/// Runs the configured epochs of minibatch PPO on one agent's full buffer and clears it.
/// On a non-finite loss the parameters and optimiser state are left untouched.
pub fn ppo_update<R: Rng + ?Sized>(
    params: &mut PolicyParams,
    optim: &mut PpoOptimizers,
    buffer: &mut RolloutBuffer,
    gamma: f64,
    cfg: &PpoConfig,
    update_index: u64,
    rng: &mut R,
) -> Result<UpdateStats, PolicyError> {
    let result = update_inner(params, optim, buffer, gamma, cfg, update_index, rng);
    buffer.clear();
    result
}

fn update_inner<R: Rng + ?Sized>(
    params: &mut PolicyParams,
    optim: &mut PpoOptimizers,
    buffer: &RolloutBuffer,
    gamma: f64,
    cfg: &PpoConfig,
    update_index: u64,
    rng: &mut R,
) -> Result<UpdateStats, PolicyError> {
    let adv = compute_advantages(buffer, params, gamma, cfg.gae_lambda)?;
    let ts = buffer.transitions();
    let snapshot = (params.clone(), optim.clone());
    let mut order: Vec<usize> = (0..ts.len()).collect();
    let mut stats = UpdateStats {
        mean_reward: ts.iter().map(|t| t.reward).sum::<f64>() / ts.len() as f64,
        ..UpdateStats::default()
    };
    let mut batches = 0usize;
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.minibatch.min(ts.len())) {
            let batch: Vec<Sample<'_>> = chunk
                .iter()
                .map(|&k| Sample { transition: &ts[k], advantage: adv.normalized[k], target: adv.returns[k] })
                .collect();
            let (a_loss, mut a_grad) = actor_loss_and_grad(params, &batch, cfg.clip_epsilon, cfg.entropy_coef);
            let (c_loss, mut c_grad) = critic_loss_and_grad(params, &batch);
            let fail = |which, loss: f64| {
                Err(PolicyError::NonFiniteLoss {
                    which,
                    update: update_index,
                    agent_id: buffer.agent_id(),
                    diagnostics: format!(
                        "loss={loss}, params_finite={}, rewards_finite={}",
                        params.is_finite(),
                        ts.iter().all(|t| t.reward.is_finite())
                    ),
                })
            };
            if !a_loss.is_finite() || a_grad.iter().any(|g| !g.is_finite()) {
                let err = fail("actor", a_loss);
                (*params, *optim) = snapshot;
                return err;
            }
            if !c_loss.is_finite() || c_grad.iter().any(|g| !g.is_finite()) {
                let err = fail("critic", c_loss);
                (*params, *optim) = snapshot;
                return err;
            }
            clip_norm(&mut a_grad, cfg.grad_clip);
            clip_norm(&mut c_grad, cfg.grad_clip);
            let mut flat = params.actor_flat();
            optim.actor.step(&mut flat, &a_grad);
            params.set_actor_flat(&flat);
            optim.critic.step(params.critic.params_mut(), &c_grad);
            stats.actor_loss += a_loss;
            stats.critic_loss += c_loss;
            batches += 1;
        }
    }
    stats.actor_loss /= batches as f64;
    stats.critic_loss /= batches as f64;
    stats.entropy = gaussian_entropy(&params.effective_log_std());
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{Action, OBS_DIM};
    use crate::policy::params::init_params;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn transitions(params: &PolicyParams, n: usize, seed: u64) -> Vec<Transition> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let x: [f64; OBS_DIM] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
                let y: [f64; OBS_DIM] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
                let (mean, std) = super::super::params::policy_forward(params, &x);
                let s = super::super::distribution::sample_action(&mean, &std, &mut rng);
                Transition {
                    input_prev: x,
                    raw_action: s.raw,
                    action: s.action,
                    logprob: s.logprob,
                    reward: rng.random_range(-1.0..1.0),
                    input_next: y,
                    episode_end: false,
                }
            })
            .collect()
    }

    #[test]
    fn unit_ratio_makes_clipping_irrelevant() {
        let p = init_params(8, 1);
        let ts = transitions(&p, 16, 2);
        let batch: Vec<Sample<'_>> =
            ts.iter().enumerate().map(|(k, t)| Sample { transition: t, advantage: k as f64 - 7.5, target: 0.0 }).collect();
        let (tight, g1) = actor_loss_and_grad(&p, &batch, 0.01, 0.0);
        let (loose, g2) = actor_loss_and_grad(&p, &batch, 0.9, 0.0);
        assert!((tight - loose).abs() < 1e-12);
        let expected = -batch.iter().map(|s| s.advantage).sum::<f64>() / 16.0;
        assert!((tight - expected).abs() < 1e-9);
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_advantage_leaves_only_entropy() {
        let p = init_params(8, 3);
        let ts = transitions(&p, 8, 4);
        let batch: Vec<Sample<'_>> = ts.iter().map(|t| Sample { transition: t, advantage: 0.0, target: 0.0 }).collect();
        let (loss, _) = actor_loss_and_grad(&p, &batch, 0.2, 0.05);
        assert!((loss + 0.05 * gaussian_entropy(&p.effective_log_std())).abs() < 1e-12);
    }

    #[test]
    fn update_clears_buffer_and_changes_params() {
        let mut p = init_params(8, 5);
        let cfg = PpoConfig { minibatch: 4, ..PpoConfig::default() };
        let mut opt = PpoOptimizers::new(&p, &cfg);
        let mut buf = RolloutBuffer::new(0, 8);
        for t in transitions(&p, 8, 6) {
            buf.push(t);
        }
        let before = p.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let stats = ppo_update(&mut p, &mut opt, &mut buf, 0.9, &cfg, 0, &mut rng).unwrap();
        assert!(buf.is_empty());
        assert_ne!(before, p);
        assert!(stats.actor_loss.is_finite() && stats.critic_loss.is_finite());
    }

    #[test]
    fn non_finite_reward_aborts_without_touching_params() {
        let mut p = init_params(8, 5);
        let cfg = PpoConfig::default();
        let mut opt = PpoOptimizers::new(&p, &cfg);
        let mut buf = RolloutBuffer::new(3, 4);
        for mut t in transitions(&p, 4, 6) {
            t.reward = f64::NAN;
            buf.push(t);
        }
        let before = p.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let err = ppo_update(&mut p, &mut opt, &mut buf, 0.9, &cfg, 11, &mut rng).unwrap_err();
        assert!(matches!(err, PolicyError::NonFiniteLoss { agent_id: 3, update: 11, .. }), "{err}");
        assert_eq!(before, p);
        assert!(buf.is_empty());
    }

    #[test]
    fn small_step_does_not_increase_surrogate() {
        let p = init_params(8, 8);
        let ts = transitions(&p, 16, 9);
        let batch: Vec<Sample<'_>> =
            ts.iter().enumerate().map(|(k, t)| Sample { transition: t, advantage: (k as f64).sin(), target: 0.0 }).collect();
        let (l0, g) = actor_loss_and_grad(&p, &batch, 0.2, 0.0);
        let mut q = p.clone();
        let mut flat = q.actor_flat();
        flat.iter_mut().zip(&g).for_each(|(x, gi)| *x -= 1e-6 * gi);
        q.set_actor_flat(&flat);
        let (l1, _) = actor_loss_and_grad(&q, &batch, 0.2, 0.0);
        assert!(l1 <= l0, "{l1} > {l0}");
        let _ = Action::new(0.0, 0.0);
    }
}
