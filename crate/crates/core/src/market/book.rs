//! Continuous double-auction order book with price-time priority.
//!
//! Prices are stored as integer multiples of the tick size so that levels compare
//! exactly. Incoming orders execute against the opposite side at the resting
//! order's price; an agent never trades with itself. Own resting orders are skipped
//! during matching, and a remainder that would then rest through its owner's
//! opposite quotes is cancelled so the book is never left crossed.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::order::{AgentId, Order, Side, Trade};
use crate::error::ModelError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestingOrder {
    pub id: u64,
    pub agent_id: AgentId,
    pub volume: i64,
    pub submit_time: u64,
}

/// How long an unfilled order stays on the book. Serialised as an integer step
/// count or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lifetime {
    Steps(u64),
    Infinite,
}

impl Serialize for Lifetime {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Lifetime::Steps(n) => s.serialize_u64(*n),
            Lifetime::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Lifetime {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Steps(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Steps(0) => Err(serde::de::Error::custom("order lifetime must be >= 1")),
            Raw::Steps(n) => Ok(Lifetime::Steps(n)),
            Raw::Text(t) if t == "inf" => Ok(Lifetime::Infinite),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("expected a step count or \"inf\", got {t:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OrderBook {
    tick_size: f64,
    bids: BTreeMap<i64, VecDeque<RestingOrder>>,
    asks: BTreeMap<i64, VecDeque<RestingOrder>>,
    last_trade_price: Option<f64>,
    next_id: u64,
    self_trade_cancelled: i64,
}

impl OrderBook {
    pub fn new(tick_size: f64) -> Result<Self, ModelError> {
        if !(tick_size.is_finite() && tick_size > 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "tick_size",
                reason: format!("must be positive, got {tick_size}"),
            });
        }
        Ok(OrderBook {
            tick_size,
            bids: BTreeMap::new(),
            asks: BTreeMap::new(),
            last_trade_price: None,
            next_id: 0,
            self_trade_cancelled: 0,
        })
    }

    pub fn tick_size(&self) -> f64 {
        self.tick_size
    }

    /// Nearest tick index, never below one tick.
    pub fn to_ticks(&self, price: f64) -> i64 {
        ((price / self.tick_size).round() as i64).max(1)
    }

    pub fn tick_price(&self, ticks: i64) -> f64 {
        ticks as f64 * self.tick_size
    }

    /// Rounds a price to the tick grid.
    pub fn quantize(&self, price: f64) -> f64 {
        self.tick_price(self.to_ticks(price))
    }

    pub fn last_trade_price(&self) -> Option<f64> {
        self.last_trade_price
    }

    /// Volume dropped because the remainder would have crossed the owner's own quotes.
    pub fn self_trade_cancelled(&self) -> i64 {
        self.self_trade_cancelled
    }

    pub fn best_bid(&self) -> Option<f64> {
        self.bids.keys().next_back().map(|&t| self.tick_price(t))
    }

    pub fn best_ask(&self) -> Option<f64> {
        self.asks.keys().next().map(|&t| self.tick_price(t))
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty() && self.asks.is_empty()
    }

    pub fn order_count(&self) -> usize {
        self.bids.values().chain(self.asks.values()).map(|q| q.len()).sum()
    }

    pub fn is_crossed(&self) -> bool {
        match (self.bids.keys().next_back(), self.asks.keys().next()) {
            (Some(b), Some(a)) => b >= a,
            _ => false,
        }
    }

    /// Matches `order` against the opposite side and rests any remainder.
    /// Trades are returned in execution order.
    pub fn submit(&mut self, order: Order) -> Result<Vec<Trade>, ModelError> {
        order.validate()?;
        let side = order.side();
        let limit = self.to_ticks(order.price);
        let mut remaining = order.remaining_volume;
        let mut trades = Vec::new();

        let crossing: Vec<i64> = match side {
            Side::Buy => self.asks.range(..=limit).map(|(&k, _)| k).collect(),
            Side::Sell => self.bids.range(limit..).rev().map(|(&k, _)| k).collect(),
        };
        let tick = self.tick_size;
        let opposite = match side {
            Side::Buy => &mut self.asks,
            Side::Sell => &mut self.bids,
        };
        for level in crossing {
            if remaining == 0 {
                break;
            }
            let queue = opposite.get_mut(&level).expect("level listed above");
            let price = level as f64 * tick;
            let mut i = 0;
            while i < queue.len() && remaining > 0 {
                if queue[i].agent_id == order.agent_id {
                    i += 1;
                    continue;
                }
                let fill = remaining.min(queue[i].volume);
                let (buyer_id, seller_id) = match side {
                    Side::Buy => (order.agent_id, queue[i].agent_id),
                    Side::Sell => (queue[i].agent_id, order.agent_id),
                };
                trades.push(Trade {
                    step: order.submit_time,
                    price,
                    volume: fill,
                    buyer_id,
                    seller_id,
                });
                queue[i].volume -= fill;
                remaining -= fill;
                if queue[i].volume == 0 {
                    queue.remove(i);
                } else {
                    i += 1;
                }
            }
            if queue.is_empty() {
                opposite.remove(&level);
            }
        }
        if let Some(last) = trades.last() {
            self.last_trade_price = Some(last.price);
        }

        if remaining > 0 {
            let would_cross = match side {
                Side::Buy => self.asks.keys().next().is_some_and(|&a| a <= limit),
                Side::Sell => self.bids.keys().next_back().is_some_and(|&b| b >= limit),
            };
            if would_cross {
                self.self_trade_cancelled += remaining;
            } else {
                let resting = RestingOrder {
                    id: self.next_id,
                    agent_id: order.agent_id,
                    volume: remaining,
                    submit_time: order.submit_time,
                };
                self.next_id += 1;
                let same = match side {
                    Side::Buy => &mut self.bids,
                    Side::Sell => &mut self.asks,
                };
                same.entry(limit).or_default().push_back(resting);
            }
        }
        Ok(trades)
    }

    /// Mid price when both sides are quoted, `fallback` otherwise.
    pub fn mid_price(&self, fallback: f64) -> f64 {
        match (self.best_bid(), self.best_ask()) {
            (Some(b), Some(a)) => 0.5 * (b + a),
            _ => fallback,
        }
    }

    /// Resting volume strictly inside `(mid(1-xi), mid)` for bids or `(mid, mid(1+xi))`
    /// for asks, each level weighted by `exp(-decay * |mid - p| / mid)`.
    pub fn depth_weighted_volume(&self, side: Side, mid: f64, xi: f64, decay: f64) -> f64 {
        let weight = |p: f64| (-decay * (mid - p).abs() / mid).exp();
        let levels: Box<dyn Iterator<Item = (&i64, &VecDeque<RestingOrder>)>> = match side {
            Side::Buy => Box::new(self.bids.iter().rev()),
            Side::Sell => Box::new(self.asks.iter()),
        };
        let (lo, hi) = match side {
            Side::Buy => (mid * (1.0 - xi), mid),
            Side::Sell => (mid, mid * (1.0 + xi)),
        };
        let mut total = 0.0;
        for (&ticks, queue) in levels {
            let p = self.tick_price(ticks);
            let inside = p > lo && p < hi;
            if !inside {
                // levels are visited best-first, so once past the far edge nothing else fits
                let beyond = match side {
                    Side::Buy => p <= lo,
                    Side::Sell => p >= hi,
                };
                if beyond {
                    break;
                }
                continue;
            }
            let volume: i64 = queue.iter().map(|o| o.volume).sum();
            total += volume as f64 * weight(p);
        }
        total
    }

    /// Removes every resting order with `submit_time <= now - lifetime`.
    pub fn expire_orders(&mut self, now: u64, lifetime: Lifetime) -> usize {
        let Lifetime::Steps(life) = lifetime else {
            return 0;
        };
        if now < life {
            return 0;
        }
        let cutoff = now - life;
        let mut removed = 0;
        for book in [&mut self.bids, &mut self.asks] {
            book.retain(|_, queue| {
                let before = queue.len();
                queue.retain(|o| o.submit_time > cutoff);
                removed += before - queue.len();
                !queue.is_empty()
            });
        }
        removed
    }

    /// Aggregated `(price, volume)` per level, best level first.
    pub fn levels(&self, side: Side) -> Vec<(f64, i64)> {
        let agg = |(&t, q): (&i64, &VecDeque<RestingOrder>)| {
            (self.tick_price(t), q.iter().map(|o| o.volume).sum::<i64>())
        };
        match side {
            Side::Buy => self.bids.iter().rev().map(agg).collect(),
            Side::Sell => self.asks.iter().map(agg).collect(),
        }
    }

    /// Resting orders of one side, best price first and in time priority within a level.
    pub fn resting_orders(&self, side: Side) -> Vec<(f64, RestingOrder)> {
        let flatten = |(&t, q): (&i64, &VecDeque<RestingOrder>)| {
            let p = self.tick_price(t);
            q.iter().map(move |o| (p, o.clone())).collect::<Vec<_>>()
        };
        match side {
            Side::Buy => self.bids.iter().rev().flat_map(flatten).collect(),
            Side::Sell => self.asks.iter().flat_map(flatten).collect(),
        }
    }

    pub fn total_volume(&self, side: Side) -> i64 {
        self.levels(side).iter().map(|&(_, v)| v).sum()
    }
}
