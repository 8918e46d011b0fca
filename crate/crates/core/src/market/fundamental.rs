use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::ModelError;

/// Zero-drift geometric random walk for the latent fundamental price.
#[derive(Debug, Clone)]
pub struct FundamentalProcess {
    value: f64,
    step_volatility: f64,
    rng: ChaCha8Rng,
}

impl FundamentalProcess {
    pub fn new(initial: f64, step_volatility: f64, seed: u64) -> Result<Self, ModelError> {
        if !(initial.is_finite() && initial > 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "initial_price",
                reason: format!("must be positive, got {initial}"),
            });
        }
        if !(step_volatility.is_finite() && step_volatility >= 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "fundamental_volatility",
                reason: format!("must be non-negative, got {step_volatility}"),
            });
        }
        Ok(FundamentalProcess {
            value: initial,
            step_volatility,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn step_volatility(&self) -> f64 {
        self.step_volatility
    }

    /// Advances one step: `p_f <- p_f * exp(eps)`, `eps ~ N(0, vol^2)`.
    pub fn step(&mut self) -> f64 {
        if self.step_volatility > 0.0 {
            let eps = Normal::new(0.0, self.step_volatility)
                .expect("volatility validated")
                .sample(&mut self.rng);
            self.value *= eps.exp();
        }
        self.value
    }
}

/// Step counter for one simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MarketClock {
    t: u64,
    t_sim: u64,
    n_agents: usize,
}

impl MarketClock {
    pub fn new(t_sim: u64, n_agents: usize) -> Self {
        MarketClock { t: 0, t_sim, n_agents }
    }

    /// Current step; 0 before the first call to [`MarketClock::advance`].
    pub fn now(&self) -> u64 {
        self.t
    }

    pub fn total_steps(&self) -> u64 {
        self.t_sim
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    /// Moves to the next step, returning it, or `None` once `t_sim` steps have run.
    pub fn advance(&mut self) -> Option<u64> {
        if self.t >= self.t_sim {
            return None;
        }
        self.t += 1;
        Some(self.t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_volatility_is_constant() {
        let mut f = FundamentalProcess::new(300.0, 0.0, 1).unwrap();
        for _ in 0..100 {
            assert_eq!(f.step(), 300.0);
        }
    }

    #[test]
    fn seeded_paths_repeat() {
        let mut a = FundamentalProcess::new(300.0, 1e-3, 42).unwrap();
        let mut b = FundamentalProcess::new(300.0, 1e-3, 42).unwrap();
        for _ in 0..1000 {
            assert_eq!(a.step().to_bits(), b.step().to_bits());
        }
    }

    #[test]
    fn log_increment_std_matches_volatility() {
        let vol = 1e-4;
        let mut f = FundamentalProcess::new(300.0, vol, 7).unwrap();
        let mut prev = f.value();
        let incs: Vec<f64> = (0..100_000)
            .map(|_| {
                let v = f.step();
                let d = (v / prev).ln();
                prev = v;
                d
            })
            .collect();
        let n = incs.len() as f64;
        let mean = incs.iter().sum::<f64>() / n;
        let sd = (incs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((sd / vol - 1.0).abs() < 0.03, "sd {sd}");
        assert!(f.value() > 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(FundamentalProcess::new(0.0, 0.1, 0).is_err());
        assert!(FundamentalProcess::new(1.0, -0.1, 0).is_err());
    }

    #[test]
    fn clock_stops_after_t_sim() {
        let mut c = MarketClock::new(3, 2);
        assert_eq!(c.now(), 0);
        assert_eq!(c.advance(), Some(1));
        assert_eq!(c.advance(), Some(2));
        assert_eq!(c.advance(), Some(3));
        assert_eq!(c.advance(), None);
        assert_eq!(c.now(), 3);
    }
}
