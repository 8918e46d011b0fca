//! The shared-policy training loop and a frozen driver for evaluation runs.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::buffer::{RolloutBuffer, Transition};
use super::distribution::{mean_action, sample_action};
use super::normalizer::ObsNormalizer;
use super::params::{init_params, policy_forward, PolicyParams};
use super::ppo::{ppo_update, PpoConfig, PpoOptimizers};
use crate::agent::{AgentTraits, Observation, OBS_DIM};
use crate::config::{AgentKind, LearningConfig};
use crate::error::{PolicyError, Result};
use crate::sim::{run_episode, Decision, LearningEvent, PolicyDriver, SimSettings};

/// One row of the training log, written once per PPO update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrainLogRow {
    pub iteration: u64,
    pub mean_reward: f64,
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub entropy: f64,
}

pub fn write_train_log<W: Write>(out: W, rows: &[TrainLogRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub hidden_width: usize,
    pub t_rollout: usize,
    pub max_iterations: u64,
    pub max_episodes: u64,
    pub plateau_window: usize,
    pub plateau_tolerance: f64,
    pub ppo: PpoConfig,
    /// Observation component zeroed at the network input.
    pub mask: Option<usize>,
}

impl TrainOptions {
    pub fn from_config(l: &LearningConfig) -> Self {
        TrainOptions {
            hidden_width: l.hidden_width,
            t_rollout: l.t_rollout,
            max_iterations: l.max_iterations,
            max_episodes: l.max_episodes,
            plateau_window: l.plateau_window,
            plateau_tolerance: l.plateau_tolerance,
            ppo: l.ppo,
            mask: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    IterationBudget,
    Plateau,
    EpisodeBudget,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: PolicyParams,
    pub normalizer: ObsNormalizer,
    pub log: Vec<TrainLogRow>,
    pub episodes: u64,
    pub stop_reason: StopReason,
}

fn network_input(normalizer: &ObsNormalizer, obs: &Observation, mask: Option<usize>) -> [f64; OBS_DIM] {
    let mut x = normalizer.normalize(&obs.0);
    if let Some(k) = mask {
        x[k] = 0.0;
    }
    x
}

/// Relative change of the moving-average reward between the last two windows.
pub fn plateau_reached(log: &[TrainLogRow], window: usize, tolerance: f64) -> bool {
    if window == 0 || log.len() < 2 * window {
        return false;
    }
    let mean = |rows: &[TrainLogRow]| rows.iter().map(|r| r.mean_reward).sum::<f64>() / rows.len() as f64;
    let recent = mean(&log[log.len() - window..]);
    let before = mean(&log[log.len() - 2 * window..log.len() - window]);
    (recent - before).abs() <= tolerance * before.abs()
}

/// Learning driver: samples from the shared policy, stores each agent's transitions from
/// its second event onward, and updates whenever one agent's buffer fills.
struct Learner {
    params: PolicyParams,
    normalizer: ObsNormalizer,
    optim: PpoOptimizers,
    opts: TrainOptions,
    buffers: Vec<RolloutBuffer>,
    pending: Vec<Option<Decision>>,
    gammas: Vec<f64>,
    log: Vec<TrainLogRow>,
    iteration: u64,
    ppo_rng: ChaCha8Rng,
}

impl Learner {
    fn budget_spent(&self) -> bool {
        self.iteration >= self.opts.max_iterations
    }
}

impl PolicyDriver for Learner {
    fn begin_episode(&mut self, traits: &[AgentTraits], _kinds: &[AgentKind]) {
        let n = traits.len();
        self.gammas = traits.iter().map(|t| t.gamma).collect();
        self.pending = vec![None; n];
        if self.buffers.len() != n {
            self.buffers = (0..n).map(|j| RolloutBuffer::new(j, self.opts.t_rollout)).collect();
        }
    }

    fn decide(&mut self, _agent: usize, obs: &Observation, rng: &mut ChaCha8Rng) -> Decision {
        self.normalizer.update(&obs.0);
        let input = network_input(&self.normalizer, obs, self.opts.mask);
        let (mean, std) = policy_forward(&self.params, &input);
        let s = sample_action(&mean, &std, rng);
        Decision { input, raw: s.raw, action: s.action, logprob: s.logprob }
    }

    fn observe(&mut self, ev: &LearningEvent<'_>) -> Result<(), PolicyError> {
        let j = ev.agent;
        if let Some(prev) = self.pending[j].replace(*ev.decision) {
            if self.budget_spent() {
                return Ok(());
            }
            let full = self.buffers[j].push(Transition {
                input_prev: prev.input,
                raw_action: prev.raw,
                action: prev.action,
                logprob: prev.logprob,
                reward: ev.reward,
                input_next: ev.decision.input,
                episode_end: false,
            });
            if full {
                let stats = ppo_update(
                    &mut self.params,
                    &mut self.optim,
                    &mut self.buffers[j],
                    self.gammas[j],
                    &self.opts.ppo,
                    self.iteration,
                    &mut self.ppo_rng,
                )?;
                self.iteration += 1;
                self.log.push(TrainLogRow {
                    iteration: self.iteration,
                    mean_reward: stats.mean_reward,
                    actor_loss: stats.actor_loss,
                    critic_loss: stats.critic_loss,
                    entropy: stats.entropy,
                });
            }
        }
        Ok(())
    }

    fn end_episode(&mut self) -> Result<(), PolicyError> {
        for b in &mut self.buffers {
            b.mark_episode_end();
        }
        self.pending.iter_mut().for_each(|p| *p = None);
        Ok(())
    }
}

/// Trains a fresh shared policy: traits are redrawn every episode and training stops at
/// the first episode boundary after the update budget, the plateau detector or the
/// episode budget fires.
pub fn train(settings: &SimSettings, opts: &TrainOptions, seed: u64) -> Result<TrainOutcome> {
    opts.ppo.validate()?;
    let params = init_params(opts.hidden_width, seed);
    let mut learner = Learner {
        optim: PpoOptimizers::new(&params, &opts.ppo),
        params,
        normalizer: ObsNormalizer::default(),
        opts: *opts,
        buffers: Vec::new(),
        pending: Vec::new(),
        gammas: Vec::new(),
        log: Vec::new(),
        iteration: 0,
        ppo_rng: ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15),
    };
    let mut episode_seeds = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut episodes = 0;
    let stop_reason = loop {
        if episodes >= opts.max_episodes {
            break StopReason::EpisodeBudget;
        }
        run_episode(settings, &mut learner, episode_seeds.random())?;
        episodes += 1;
        if learner.budget_spent() {
            break StopReason::IterationBudget;
        }
        if plateau_reached(&learner.log, opts.plateau_window, opts.plateau_tolerance) {
            break StopReason::Plateau;
        }
    };
    Ok(TrainOutcome { params: learner.params, normalizer: learner.normalizer, log: learner.log, episodes, stop_reason })
}

/// Read-only driver for evaluation: frozen parameters and normalisation statistics.
#[derive(Debug, Clone)]
pub struct FrozenPolicy {
    pub params: PolicyParams,
    pub normalizer: ObsNormalizer,
    pub mask: Option<usize>,
    /// Act on the distribution mean instead of sampling.
    pub deterministic: bool,
    /// When set, every query stores `(second hidden layer, raw observation)`.
    pub record_activations: bool,
    pub activations: Vec<(Vec<f64>, [f64; OBS_DIM])>,
}

impl FrozenPolicy {
    pub fn new(params: PolicyParams, normalizer: ObsNormalizer) -> Self {
        FrozenPolicy { params, normalizer, mask: None, deterministic: false, record_activations: false, activations: Vec::new() }
    }
}

impl PolicyDriver for FrozenPolicy {
    fn decide(&mut self, _agent: usize, obs: &Observation, rng: &mut ChaCha8Rng) -> Decision {
        let input = network_input(&self.normalizer, obs, self.mask);
        if self.record_activations {
            self.activations.push((self.params.actor.hidden(&input, 2), obs.0));
        }
        let (mean, std) = policy_forward(&self.params, &input);
        if self.deterministic {
            Decision { input, raw: mean, action: mean_action(&mean), logprob: f64::NAN }
        } else {
            let s = sample_action(&mean, &std, rng);
            Decision { input, raw: s.raw, action: s.action, logprob: s.logprob }
        }
    }
}
