//! Experiment configuration, loaded from TOML with unknown keys rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::{RewardConfig, TraitPriors};
use crate::baselines::{FcnPriors, ZiParams};
use crate::error::{Error, Result};
use crate::market::Lifetime;
use crate::policy::PpoConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Learning,
    Zi,
    Fcn,
    Adfcn,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Learning => "learning",
            AgentKind::Zi => "zi",
            AgentKind::Fcn => "fcn",
            AgentKind::Adfcn => "adfcn",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Population {
    pub agent_type: AgentKind,
    pub count: usize,
}

fn default_tick() -> f64 {
    0.1
}
fn default_initial_price() -> f64 {
    300.0
}
fn default_fundamental_volatility() -> f64 {
    2e-4
}
fn default_lifetime() -> Lifetime {
    Lifetime::Steps(1000)
}
fn default_seed_levels() -> usize {
    5
}
fn default_seed_volume() -> i64 {
    5
}
fn default_seed_spacing() -> f64 {
    0.001
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub n_agents: usize,
    pub t_sim: u64,
    #[serde(default = "default_tick")]
    pub tick: f64,
    /// Opening fundamental value; the seeded book is centred on it.
    #[serde(default = "default_initial_price")]
    pub initial_price: f64,
    #[serde(default = "default_fundamental_volatility")]
    pub fundamental_volatility: f64,
    #[serde(default = "default_lifetime")]
    pub order_lifetime: Lifetime,
    /// Price levels per side placed by the liquidity seeding account at step 0.
    #[serde(default = "default_seed_levels")]
    pub seed_levels: usize,
    #[serde(default = "default_seed_volume")]
    pub seed_volume: i64,
    /// Relative distance between seeded levels.
    #[serde(default = "default_seed_spacing")]
    pub seed_spacing: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentConfig {
    pub priors: TraitPriors,
    pub reward: RewardConfig,
    /// Agent types; empty means every agent learns.
    pub populations: Vec<Population>,
    pub zi: ZiParams,
    pub fcn: FcnPriors,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearningConfig {
    pub hidden_width: usize,
    pub t_rollout: usize,
    /// Budget of PPO updates.
    pub max_iterations: u64,
    pub max_episodes: u64,
    /// Window (in updates) of the moving-average plateau detector; 0 disables it.
    pub plateau_window: usize,
    pub plateau_tolerance: f64,
    pub ppo: PpoConfig,
}

impl Default for LearningConfig {
    fn default() -> Self {
        LearningConfig {
            hidden_width: 64,
            t_rollout: 128,
            max_iterations: 200,
            max_episodes: 50,
            plateau_window: 0,
            plateau_tolerance: 0.01,
            ppo: PpoConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailIndexing {
    /// Log-ratios of the K largest values to the (K+1)-th largest.
    Hill,
    /// Index arithmetic taken verbatim from the descending-order formula.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    pub steps_per_bar: usize,
    pub max_lag: usize,
    /// Tail size as a fraction of the sample count.
    pub tail_fraction: f64,
    pub tail_band: [f64; 2],
    pub tail_indexing: TailIndexing,
    /// Cap on the point count of each cloud before OT; larger clouds are subsampled.
    pub cloud_size: usize,
    /// Weights of the return, tail and autocorrelation OT distances.
    pub ot_weights: [f64; 3],
    pub trials: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            steps_per_bar: 10,
            max_lag: 70,
            tail_fraction: 0.05,
            tail_band: [2.4, 3.6],
            tail_indexing: TailIndexing::Hill,
            cloud_size: 500,
            ot_weights: [1.0, 1.0, 1.0],
            trials: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationConfig {
    pub sigma_std: Vec<f64>,
    pub alpha_std: Vec<f64>,
    pub gamma_min: Vec<f64>,
    pub trials: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            sigma_std: vec![0.0, 0.005, 0.01],
            alpha_std: vec![0.0, 0.5, 1.0],
            gamma_min: vec![0.5, 0.7, 0.9],
            trials: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub market: MarketConfig,
    #[serde(default)]
    pub agent: AgentConfig,
    #[serde(default)]
    pub learning: LearningConfig,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(default)]
    pub calibration: CalibrationConfig,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    /// Minimal valid configuration with every optional section at its default.
    pub fn with_market(n_agents: usize, t_sim: u64) -> Self {
        ExperimentConfig {
            market: MarketConfig {
                n_agents,
                t_sim,
                tick: default_tick(),
                initial_price: default_initial_price(),
                fundamental_volatility: default_fundamental_volatility(),
                order_lifetime: default_lifetime(),
                seed_levels: default_seed_levels(),
                seed_volume: default_seed_volume(),
                seed_spacing: default_seed_spacing(),
            },
            agent: AgentConfig::default(),
            learning: LearningConfig::default(),
            evaluation: EvaluationConfig::default(),
            calibration: CalibrationConfig::default(),
            seed: 0,
        }
    }

    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config { path: origin.to_path_buf(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(&json))
    }

    /// Agent type of each index, in population order.
    pub fn agent_kinds(&self) -> Vec<AgentKind> {
        if self.agent.populations.is_empty() {
            return vec![AgentKind::Learning; self.market.n_agents];
        }
        self.agent.populations.iter().flat_map(|p| std::iter::repeat_n(p.agent_type, p.count)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.market;
        if m.n_agents == 0 {
            return Err(Error::validation("market.n_agents", "must be >= 1"));
        }
        if m.t_sim == 0 {
            return Err(Error::validation("market.t_sim", "must be >= 1"));
        }
        for (key, v) in [("market.tick", m.tick), ("market.initial_price", m.initial_price)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(key, "must be positive"));
            }
        }
        if !(m.fundamental_volatility >= 0.0 && m.fundamental_volatility.is_finite()) {
            return Err(Error::validation("market.fundamental_volatility", "must be >= 0"));
        }
        if m.seed_volume < 1 || !(m.seed_spacing > 0.0) || m.seed_levels as f64 * m.seed_spacing >= 1.0 {
            return Err(Error::validation("market.seed_spacing", "seed volume >= 1 and levels * spacing in (0, 1)"));
        }
        let a = &self.agent;
        a.priors.validate().map_err(|e| Error::validation("agent.priors", e.to_string()))?;
        a.reward.validate().map_err(|e| Error::validation("agent.reward", e.to_string()))?;
        a.fcn.validate().map_err(|e| Error::validation("agent.fcn", e.to_string()))?;
        if !(a.zi.spread_scale >= 0.0) {
            return Err(Error::validation("agent.zi.spread_scale", "must be >= 0"));
        }
        if !a.populations.is_empty() {
            let total: usize = a.populations.iter().map(|p| p.count).sum();
            if total != m.n_agents {
                return Err(Error::validation(
                    "agent.populations",
                    format!("counts sum to {total}, expected market.n_agents = {}", m.n_agents),
                ));
            }
        }
        let l = &self.learning;
        if l.hidden_width == 0 || l.t_rollout == 0 {
            return Err(Error::validation("learning.hidden_width", "hidden_width and t_rollout must be >= 1"));
        }
        if !(l.plateau_tolerance >= 0.0) {
            return Err(Error::validation("learning.plateau_tolerance", "must be >= 0"));
        }
        l.ppo.validate().map_err(|e| Error::validation("learning.ppo", e.to_string()))?;
        let e = &self.evaluation;
        if e.steps_per_bar == 0 || e.max_lag < 3 || e.cloud_size == 0 {
            return Err(Error::validation("evaluation", "steps_per_bar, cloud_size >= 1 and max_lag >= 3"));
        }
        if !(e.tail_fraction > 0.0 && e.tail_fraction < 1.0) {
            return Err(Error::validation("evaluation.tail_fraction", "must lie in (0, 1)"));
        }
        if !(e.tail_band[0] < e.tail_band[1]) {
            return Err(Error::validation("evaluation.tail_band", "lower bound must be below upper bound"));
        }
        if e.ot_weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::validation("evaluation.ot_weights", "must be nonnegative"));
        }
        let c = &self.calibration;
        if c.sigma_std.is_empty() || c.alpha_std.is_empty() || c.gamma_min.is_empty() || c.trials == 0 {
            return Err(Error::validation("calibration", "grid axes must be nonempty and trials >= 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_loads_with_defaults() {
        let cfg = ExperimentConfig::from_toml_str("[market]\nn_agents = 4\nt_sim = 100\n", Path::new("x.toml")).unwrap();
        assert_eq!(cfg, ExperimentConfig::with_market(4, 100));
    }

    #[test]
    fn missing_required_key_is_named() {
        let err = ExperimentConfig::from_toml_str("[market]\nn_agents = 4\n", Path::new("x.toml")).unwrap_err();
        assert!(err.to_string().contains("t_sim"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let err = ExperimentConfig::from_toml_str(
            "[market]\nn_agents = 4\nt_sim = 10\n[agent.reward]\nbeta_shrot = 1.0\n",
            Path::new("x.toml"),
        )
        .unwrap_err();
        assert!(err.to_string().contains("beta_shrot"), "{err}");
    }

    #[test]
    fn lifetime_accepts_inf_and_integers() {
        let cfg = ExperimentConfig::from_toml_str(
            "[market]\nn_agents = 2\nt_sim = 10\norder_lifetime = \"inf\"\n",
            Path::new("x.toml"),
        )
        .unwrap();
        assert_eq!(cfg.market.order_lifetime, Lifetime::Infinite);
        let cfg =
            ExperimentConfig::from_toml_str("[market]\nn_agents = 2\nt_sim = 10\norder_lifetime = 7\n", Path::new("x"))
                .unwrap();
        assert_eq!(cfg.market.order_lifetime, Lifetime::Steps(7));
        assert!(ExperimentConfig::from_toml_str("[market]\nn_agents = 2\nt_sim = 10\norder_lifetime = 0\n", Path::new("x"))
            .is_err());
    }

    #[test]
    fn round_trip_is_stable() {
        let mut cfg = ExperimentConfig::with_market(6, 500);
        cfg.market.order_lifetime = Lifetime::Infinite;
        cfg.agent.populations = vec![
            Population { agent_type: AgentKind::Learning, count: 4 },
            Population { agent_type: AgentKind::Zi, count: 2 },
        ];
        let text = cfg.to_toml_string();
        let back = ExperimentConfig::from_toml_str(&text, Path::new("rt.toml")).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash(), back.hash());
    }

    #[test]
    fn population_counts_must_match() {
        let mut cfg = ExperimentConfig::with_market(6, 500);
        cfg.agent.populations = vec![Population { agent_type: AgentKind::Fcn, count: 5 }];
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("agent.populations"));
    }
}
