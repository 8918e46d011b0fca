use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Population-level priors from which each agent's traits and endowment are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraitPriors {
    pub sigma_mean: f64,
    pub sigma_std: f64,
    pub alpha_mean: f64,
    pub alpha_std: f64,
    /// Lower end of the uniform discount-factor prior.
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// Mean of the exponential initial position.
    pub position_mean: f64,
    /// Mean of the exponential initial cash.
    pub cash_mean: f64,
}

impl Default for TraitPriors {
    fn default() -> Self {
        TraitPriors {
            sigma_mean: 0.01,
            sigma_std: 0.005,
            alpha_mean: 1.0,
            alpha_std: 0.5,
            gamma_min: 0.9,
            gamma_max: 0.99,
            position_mean: 10.0,
            cash_mean: 3000.0,
        }
    }
}

impl TraitPriors {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |name, reason: &str| Err(ModelError::InvalidParameter { name, reason: reason.into() });
        let all = [
            self.sigma_mean, self.sigma_std, self.alpha_mean, self.alpha_std,
            self.gamma_min, self.gamma_max, self.position_mean, self.cash_mean,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("trait_priors", "all values must be finite");
        }
        if self.sigma_std < 0.0 {
            return bad("sigma_std", "must be >= 0");
        }
        if self.alpha_std < 0.0 {
            return bad("alpha_std", "must be >= 0");
        }
        if !(0.0 <= self.gamma_min && self.gamma_min <= self.gamma_max && self.gamma_max < 1.0) {
            return bad("gamma_min", "need 0 <= gamma_min <= gamma_max < 1");
        }
        if self.position_mean <= 0.0 {
            return bad("position_mean", "must be > 0");
        }
        if self.cash_mean <= 0.0 {
            return bad("cash_mean", "must be > 0");
        }
        Ok(())
    }

    /// Priors with every spread collapsed onto the population mean.
    pub fn fixed_at_mean(&self) -> TraitPriors {
        let gamma = 0.5 * (self.gamma_min + self.gamma_max);
        TraitPriors {
            sigma_std: 0.0,
            alpha_std: 0.0,
            gamma_min: gamma,
            gamma_max: gamma,
            ..*self
        }
    }
}

/// Immutable preference parameters of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentTraits {
    /// Uninformedness: std of the noise on the observed fundamental return.
    pub sigma: f64,
    /// Risk aversion.
    pub alpha: f64,
    /// Discount factor.
    pub gamma: f64,
}

/// Mutable wealth and bookkeeping of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub position: i64,
    pub cash: f64,
    /// Step of the previous order event (0 before the first one).
    pub last_order_step: u64,
    pub order_count: u64,
}

impl AgentState {
    pub fn new(position: i64, cash: f64) -> Self {
        AgentState { position, cash, last_order_step: 0, order_count: 0 }
    }

    pub fn wealth(&self, price: f64) -> f64 {
        self.cash + self.position as f64 * price
    }

    /// Registers an order event at `t`, returning the previous event step.
    pub fn record_event(&mut self, t: u64) -> u64 {
        debug_assert!(self.order_count == 0 || t > self.last_order_step);
        let prev = self.last_order_step;
        self.last_order_step = t;
        self.order_count += 1;
        prev
    }
}

/// Draws traits and the initial endowment.
pub fn sample_traits<R: Rng + ?Sized>(
    priors: &TraitPriors,
    rng: &mut R,
) -> Result<(AgentTraits, AgentState), ModelError> {
    priors.validate()?;
    let normal = |mean: f64, std: f64, rng: &mut R| {
        if std == 0.0 {
            mean
        } else {
            Normal::new(mean, std).expect("validated").sample(rng)
        }
    };
    let sigma = normal(priors.sigma_mean, priors.sigma_std, rng).max(0.0);
    let alpha = normal(priors.alpha_mean, priors.alpha_std, rng);
    let gamma = if priors.gamma_min == priors.gamma_max {
        priors.gamma_min
    } else {
        rng.random_range(priors.gamma_min..priors.gamma_max)
    };
    let position = Exp::new(1.0 / priors.position_mean)
        .expect("validated")
        .sample(rng)
        .round() as i64;
    let cash = Exp::new(1.0 / priors.cash_mean).expect("validated").sample(rng);
    Ok((AgentTraits { sigma, alpha, gamma }, AgentState::new(position, cash)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn collapsed_priors_give_identical_agents() {
        let priors = TraitPriors::default().fixed_at_mean();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let first = sample_traits(&priors, &mut rng).unwrap().0;
        for _ in 0..50 {
            assert_eq!(sample_traits(&priors, &mut rng).unwrap().0, first);
        }
        assert_eq!(first.sigma, priors.sigma_mean);
        assert_eq!(first.alpha, priors.alpha_mean);
    }

    #[test]
    fn seeded_draws_repeat() {
        let p = TraitPriors::default();
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            assert_eq!(sample_traits(&p, &mut a).unwrap(), sample_traits(&p, &mut b).unwrap());
        }
    }

    #[test]
    fn sigma_sample_mean_matches_prior() {
        let p = TraitPriors { sigma_mean: 0.1, sigma_std: 0.02, ..TraitPriors::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let (t, s) = sample_traits(&p, &mut rng).unwrap();
            assert!(t.sigma >= 0.0);
            assert!(t.gamma >= p.gamma_min && t.gamma <= p.gamma_max);
            assert!(s.position >= 0 && s.cash > 0.0);
            sum += t.sigma;
        }
        let mean = sum / n as f64;
        assert!((mean - 0.1).abs() < 0.001, "mean {mean}");
    }

    #[test]
    fn sigma_is_truncated_at_zero() {
        let p = TraitPriors { sigma_mean: 0.0, sigma_std: 1.0, ..TraitPriors::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws: Vec<f64> = (0..1000).map(|_| sample_traits(&p, &mut rng).unwrap().0.sigma).collect();
        assert!(draws.iter().all(|&s| s >= 0.0));
        assert!(draws.iter().any(|&s| s == 0.0));
    }

    #[test]
    fn invalid_priors_rejected() {
        let base = TraitPriors::default();
        for bad in [
            TraitPriors { sigma_std: -1.0, ..base },
            TraitPriors { gamma_min: 0.99, gamma_max: 0.5, ..base },
            TraitPriors { gamma_max: 1.0, ..base },
            TraitPriors { cash_mean: 0.0, ..base },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
