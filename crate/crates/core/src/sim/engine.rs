use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agent::{
    build_observation, decode_action, illiquidity, reward, sample_traits, settle_trades, utility, Action,
    AgentState, AgentTraits, DeviationTracker, MarketView, Observation, RewardConfig, RewardInputs, TraitPriors,
};
use crate::baselines::{adfcn_update_and_order, fcn_order, zi_order, AdaptiveState, FcnParams, FcnPriors, ZiParams};
use crate::config::{AgentKind, ExperimentConfig, MarketConfig};
use crate::error::{ModelError, PolicyError, Result};
use crate::market::{FundamentalProcess, MarketClock, Order, OrderBook, Side, Trade};
use crate::policy::ACTION_DIM;
use crate::agent::OBS_DIM;

/// What the policy returned for one learning-agent query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    /// Network input (normalised, possibly masked).
    pub input: [f64; OBS_DIM],
    pub raw: [f64; ACTION_DIM],
    pub action: Action,
    pub logprob: f64,
}

/// A learning agent's order event, reported after its decision is made.
#[derive(Debug, Clone, Copy)]
pub struct LearningEvent<'a> {
    pub agent: usize,
    pub step: u64,
    /// 1-based index of this event among the agent's own events.
    pub order_index: u64,
    /// Reward realised at this event for the agent's previous action.
    pub reward: f64,
    pub utility: f64,
    pub observation: &'a Observation,
    pub decision: &'a Decision,
}

/// Supplies actions for learning agents and receives their rewards.
pub trait PolicyDriver {
    fn begin_episode(&mut self, _traits: &[AgentTraits], _kinds: &[AgentKind]) {}
    fn decide(&mut self, agent: usize, obs: &Observation, rng: &mut ChaCha8Rng) -> Decision;
    fn observe(&mut self, _event: &LearningEvent<'_>) -> Result<(), PolicyError> {
        Ok(())
    }
    fn end_episode(&mut self) -> Result<(), PolicyError> {
        Ok(())
    }
}

/// Everything the engine needs from the experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub market: MarketConfig,
    pub priors: TraitPriors,
    pub reward: RewardConfig,
    pub kinds: Vec<AgentKind>,
    pub zi: ZiParams,
    pub fcn: FcnPriors,
}

impl SimSettings {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        SimSettings {
            market: cfg.market.clone(),
            priors: cfg.agent.priors,
            reward: cfg.agent.reward,
            kinds: cfg.agent_kinds(),
            zi: cfg.agent.zi,
            fcn: cfg.agent.fcn,
        }
    }

    pub fn n_agents(&self) -> usize {
        self.kinds.len()
    }
}

/// Per-event record of a learning agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub agent: usize,
    pub step: u64,
    pub reward: f64,
    pub utility: f64,
    pub position: i64,
    pub cash: f64,
}

/// Output of one episode. Per-step vectors have length `t_sim + 1`, index 0 being the
/// opening state. Agent states carry one extra entry, the liquidity seeding account.
#[derive(Debug, Clone)]
pub struct Episode {
    pub mids: Vec<f64>,
    pub fundamentals: Vec<f64>,
    pub volumes: Vec<i64>,
    pub trades: Vec<Trade>,
    pub kinds: Vec<AgentKind>,
    pub traits: Vec<AgentTraits>,
    pub initial_states: Vec<AgentState>,
    pub final_states: Vec<AgentState>,
    pub events: Vec<EventRecord>,
    pub self_trade_cancelled: i64,
}

enum Baseline {
    None,
    Fcn(FcnParams),
    Adaptive(FcnParams, AdaptiveState),
}

/// Runs one episode of `t_sim` steps. Each step: the fundamental moves, stale orders
/// expire, the pre-order mid is recorded, one agent is drawn uniformly at random and
/// acts, and resulting trades settle.
pub fn run_episode(settings: &SimSettings, driver: &mut dyn PolicyDriver, seed: u64) -> Result<Episode> {
    let m = &settings.market;
    let n = settings.n_agents();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fundamental = FundamentalProcess::new(m.initial_price, m.fundamental_volatility, rng.random())?;
    let mut book = OrderBook::new(m.tick)?;
    let mut clock = MarketClock::new(m.t_sim, n);

    let mut traits = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n + 1);
    let mut baselines = Vec::with_capacity(n);
    for &kind in &settings.kinds {
        let (t, s) = sample_traits(&settings.priors, &mut rng)?;
        traits.push(t);
        states.push(s);
        baselines.push(match kind {
            AgentKind::Fcn => Baseline::Fcn(settings.fcn.sample(&mut rng)),
            AgentKind::Adfcn => {
                Baseline::Adaptive(settings.fcn.sample(&mut rng), AdaptiveState::new(settings.fcn.adaptive_window)?)
            }
            _ => Baseline::None,
        });
    }
    let seeder = n;
    states.push(AgentState::new(0, 0.0));
    for k in 1..=m.seed_levels {
        let offset = k as f64 * m.seed_spacing;
        for (sign, price) in [(1, m.initial_price * (1.0 - offset)), (-1, m.initial_price * (1.0 + offset))] {
            let order = Order::new(seeder, sign * m.seed_volume, book.quantize(price), 0)?;
            let trades = book.submit(order)?;
            debug_assert!(trades.is_empty());
        }
    }
    let initial_states = states.clone();
    driver.begin_episode(&traits, &settings.kinds);

    let steps = m.t_sim as usize;
    let mut mids = Vec::with_capacity(steps + 1);
    let mut fundamentals = Vec::with_capacity(steps + 1);
    let mut volumes = vec![0i64; steps + 1];
    mids.push(book.mid_price(m.initial_price));
    fundamentals.push(fundamental.value());
    let mut tracker = DeviationTracker::new();
    let mut trades_log = Vec::new();
    let mut events = Vec::new();
    let cfg = &settings.reward;

    while let Some(t) = clock.advance() {
        let pf = fundamental.step();
        book.expire_orders(t, m.order_lifetime);
        let fallback = book.last_trade_price().unwrap_or(pf);
        let mid = book.mid_price(fallback);
        mids.push(mid);
        fundamentals.push(pf);
        let deviation = tracker.update(pf, mid, t);
        let j = rng.random_range(0..n);
        let tu = t as usize;

        let order = match settings.kinds[j] {
            AgentKind::Learning => {
                let view = MarketView {
                    mids: &mids,
                    t_now: tu,
                    fundamental: pf,
                    buy_depth: book.depth_weighted_volume(Side::Buy, mid, cfg.depth_range, cfg.buy_decay),
                    sell_depth: book.depth_weighted_volume(Side::Sell, mid, cfg.depth_range, cfg.sell_decay),
                };
                let s = states[j];
                let obs = build_observation(&traits[j], &s, &view, cfg, &mut rng)?;
                let u = utility(
                    s.wealth(mid),
                    obs.0[Observation::RETURN],
                    s.position,
                    mid,
                    obs.0[Observation::VOLATILITY],
                    traits[j].alpha,
                    cfg.utility_scale,
                );
                let r = reward(
                    &RewardInputs {
                        utility: u,
                        position: s.position,
                        cash: s.cash,
                        illiquidity: illiquidity(view.buy_depth, view.sell_depth, cfg.imbalance_scale, cfg.illiquidity_cap),
                        fundamental_deviation: deviation,
                    },
                    cfg,
                );
                states[j].record_event(t);
                let decision = driver.decide(j, &obs, &mut rng);
                driver.observe(&LearningEvent {
                    agent: j,
                    step: t,
                    order_index: states[j].order_count,
                    reward: r,
                    utility: u,
                    observation: &obs,
                    decision: &decision,
                })?;
                events.push(EventRecord { agent: j, step: t, reward: r, utility: u, position: s.position, cash: s.cash });
                decode_action(decision.action, mid, cfg, m.tick)
            }
            AgentKind::Zi => {
                states[j].record_event(t);
                Some(zi_order(&mut rng, mid, settings.zi.spread_scale))
            }
            AgentKind::Fcn | AgentKind::Adfcn => {
                states[j].record_event(t);
                let decided = match &mut baselines[j] {
                    Baseline::Fcn(p) => fcn_order(p, &mids, tu, pf, &mut rng),
                    Baseline::Adaptive(p, a) => adfcn_update_and_order(p, a, &mids, tu, pf, &mut rng),
                    Baseline::None => unreachable!("baseline parameters drawn for every FCN agent"),
                };
                match decided {
                    Ok(o) => o,
                    Err(ModelError::InsufficientData { .. }) => None,
                    Err(e) => return Err(e.into()),
                }
            }
        };

        if let Some((volume, price)) = order {
            let price = book.quantize(price).max(m.tick);
            let trades = book.submit(Order::new(j, volume, price, t)?)?;
            settle_trades(&mut states, &trades);
            volumes[tu] += trades.iter().map(|tr| tr.volume).sum::<i64>();
            trades_log.extend(trades);
        }
    }
    driver.end_episode()?;
    Ok(Episode {
        mids,
        fundamentals,
        volumes,
        trades: trades_log,
        kinds: settings.kinds.clone(),
        traits,
        initial_states,
        final_states: states,
        events,
        self_trade_cancelled: book.self_trade_cancelled(),
    })
}
