//! Orchestration shared by the command-line entry points: seeded trial runs, bar
//! series, ablation settings and social welfare.

use serde::{Deserialize, Serialize};

use crate::agent::{AgentTraits, Observation, TraitPriors};
use crate::config::{AgentKind, ExperimentConfig};
use crate::error::{Error, Result};
use crate::ot::{CalibrationGrid, Candidate, CloudSettings};
use crate::policy::{train, Checkpoint, FrozenPolicy, TrainOptions, TrainOutcome};
use crate::sim::{bar_series, run_episode, Episode, PolicyDriver, SimSettings};
use crate::stylized::{ReturnSeries, StylizedCriteria};

/// Deterministic sub-seed for stream `stream`, item `index`.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    // splitmix64 finaliser over a combined key
    let mut z = base ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub const STREAM_TRAIN: u64 = 1;
pub const STREAM_SIMULATE: u64 = 2;
pub const STREAM_CLOUDS: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TraitName {
    Sigma,
    Alpha,
    Gamma,
}

impl TraitName {
    pub fn observation_index(self) -> usize {
        match self {
            TraitName::Sigma => Observation::UNINFORMEDNESS,
            TraitName::Alpha => Observation::RISK_AVERSION,
            TraitName::Gamma => Observation::DISCOUNT_FACTOR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AblationMode {
    /// Every agent gets the prior mean of the trait.
    Homo,
    /// The trait is hidden from the policy input.
    Masked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationSpec {
    pub trait_name: TraitName,
    pub mode: AblationMode,
}

impl AblationSpec {
    /// Priors used for trait sampling under this ablation.
    pub fn priors(&self, base: &TraitPriors) -> TraitPriors {
        let mut p = *base;
        if self.mode == AblationMode::Homo {
            match self.trait_name {
                TraitName::Sigma => p.sigma_std = 0.0,
                TraitName::Alpha => p.alpha_std = 0.0,
                TraitName::Gamma => {
                    let mid = 0.5 * (p.gamma_min + p.gamma_max);
                    p.gamma_min = mid;
                    p.gamma_max = mid;
                }
            }
        }
        p
    }

    pub fn mask(&self) -> Option<usize> {
        (self.mode == AblationMode::Masked).then(|| self.trait_name.observation_index())
    }
}

/// Sum over learning agents of `sum_i gamma_j^i u_i`, with `i` counting each agent's
/// own events from 1.
pub fn discounted_welfare<'a>(agents: impl IntoIterator<Item = (f64, &'a [f64])>) -> f64 {
    agents
        .into_iter()
        .map(|(gamma, utilities)| {
            let mut weight = 1.0;
            utilities
                .iter()
                .map(|u| {
                    weight *= gamma;
                    weight * u
                })
                .sum::<f64>()
        })
        .sum()
}

/// Social welfare of one episode, discounting with each agent's true discount factor.
pub fn social_welfare(ep: &Episode) -> f64 {
    let mut per_agent: Vec<Vec<f64>> = vec![Vec::new(); ep.traits.len()];
    for e in &ep.events {
        per_agent[e.agent].push(e.utility);
    }
    discounted_welfare(
        per_agent
            .iter()
            .enumerate()
            .filter(|(j, _)| ep.kinds[*j] == AgentKind::Learning)
            .map(|(j, u)| (ep.traits[j].gamma, u.as_slice())),
    )
}

/// Placeholder driver for populations without learning agents.
struct NoPolicy;

impl PolicyDriver for NoPolicy {
    fn decide(&mut self, _agent: usize, _obs: &Observation, _rng: &mut rand_chacha::ChaCha8Rng) -> crate::sim::Decision {
        unreachable!("population has no learning agents")
    }
}

/// Frozen policy for evaluation, checked against the configuration's network shape.
pub fn evaluation_driver(cfg: &ExperimentConfig, checkpoint: Option<&Checkpoint>) -> Result<Option<FrozenPolicy>> {
    let needs_policy = cfg.agent_kinds().contains(&AgentKind::Learning);
    match (checkpoint, needs_policy) {
        (Some(c), _) => {
            if c.params.hidden_width() != cfg.learning.hidden_width {
                return Err(Error::validation(
                    "learning.hidden_width",
                    format!(
                        "checkpoint has hidden width {}, config expects {}",
                        c.params.hidden_width(),
                        cfg.learning.hidden_width
                    ),
                ));
            }
            Ok(Some(FrozenPolicy::new(c.params.clone(), c.normalizer.clone())))
        }
        (None, true) => Err(Error::validation("checkpoint", "the population has learning agents; pass --checkpoint")),
        (None, false) => Ok(None),
    }
}

/// Runs `trials` evaluation episodes with seeds derived from `seed`.
pub fn simulate_trials(
    settings: &SimSettings,
    driver: Option<&mut FrozenPolicy>,
    trials: usize,
    seed: u64,
) -> Result<Vec<Episode>> {
    let mut out = Vec::with_capacity(trials);
    match driver {
        Some(d) => {
            for t in 0..trials {
                out.push(run_episode(settings, d, derive_seed(seed, STREAM_SIMULATE, t as u64))?);
            }
        }
        None => {
            for t in 0..trials {
                out.push(run_episode(settings, &mut NoPolicy, derive_seed(seed, STREAM_SIMULATE, t as u64))?);
            }
        }
    }
    Ok(out)
}

/// Raw per-bar log returns and volumes of each episode.
pub fn episode_bars(episodes: &[Episode], steps_per_bar: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    episodes
        .iter()
        .map(|ep| {
            let b = bar_series(&ep.mids, &ep.volumes, steps_per_bar);
            (b.log_returns, b.volumes)
        })
        .collect()
}

/// Standardised return series with one day per episode.
pub fn episodes_to_series(episodes: &[Episode], steps_per_bar: usize) -> Result<ReturnSeries> {
    let (r, v): (Vec<_>, Vec<_>) = episode_bars(episodes, steps_per_bar).into_iter().unzip();
    Ok(ReturnSeries::from_raw(r, Some(v))?)
}

pub fn stylized_criteria(cfg: &ExperimentConfig) -> StylizedCriteria {
    StylizedCriteria::new(cfg.evaluation.tail_band, cfg.evaluation.tail_fraction, cfg.evaluation.max_lag)
}

pub fn cloud_settings(cfg: &ExperimentConfig) -> CloudSettings {
    CloudSettings {
        cloud_size: cfg.evaluation.cloud_size,
        tail_fraction: cfg.evaluation.tail_fraction,
        indexing: cfg.evaluation.tail_indexing,
    }
}

pub fn calibration_grid(cfg: &ExperimentConfig) -> CalibrationGrid {
    CalibrationGrid {
        sigma_std: cfg.calibration.sigma_std.clone(),
        alpha_std: cfg.calibration.alpha_std.clone(),
        gamma_min: cfg.calibration.gamma_min.clone(),
        weights: cfg.evaluation.ot_weights,
    }
}

/// Configuration with a candidate's prior spreads.
pub fn candidate_config(cfg: &ExperimentConfig, c: &Candidate) -> ExperimentConfig {
    let mut out = cfg.clone();
    out.agent.priors.sigma_std = c.sigma_std;
    out.agent.priors.alpha_std = c.alpha_std;
    out.agent.priors.gamma_min = c.gamma_min;
    out
}

/// Trains under `cfg` (optionally with an ablation) using the configured seed.
pub fn train_config(cfg: &ExperimentConfig, ablation: Option<&AblationSpec>) -> Result<TrainOutcome> {
    let mut settings = SimSettings::from_config(cfg);
    let mut opts = TrainOptions::from_config(&cfg.learning);
    if let Some(a) = ablation {
        settings.priors = a.priors(&settings.priors);
        opts.mask = a.mask();
    }
    train(&settings, &opts, derive_seed(cfg.seed, STREAM_TRAIN, 0))
}

/// Full calibration pipeline for one candidate: train, then simulate the evaluation trials.
pub fn candidate_pipeline(cfg: &ExperimentConfig, c: &Candidate) -> Result<Vec<ReturnSeries>> {
    let ccfg = candidate_config(cfg, c);
    ccfg.validate()?;
    let outcome = train_config(&ccfg, None)?;
    let mut policy = FrozenPolicy::new(outcome.params, outcome.normalizer);
    let episodes = simulate_trials(&SimSettings::from_config(&ccfg), Some(&mut policy), ccfg.calibration.trials, ccfg.seed)?;
    episodes.iter().map(|e| episodes_to_series(std::slice::from_ref(e), ccfg.evaluation.steps_per_bar)).collect()
}

/// Trait triple of each agent, for export.
pub fn trait_rows(ep: &Episode) -> impl Iterator<Item = (usize, AgentKind, AgentTraits)> + '_ {
    ep.traits.iter().enumerate().map(|(j, t)| (j, ep.kinds[j], *t))
}
