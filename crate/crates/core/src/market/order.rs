use serde::{Deserialize, Serialize};

use crate::error::ModelError;

pub type AgentId = usize;

/// Buy or sell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Buy => Side::Sell,
            Side::Sell => Side::Buy,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Buy => "buy",
            Side::Sell => "sell",
        }
    }
}

/// A limit order as submitted by an agent. The sign of `signed_volume` carries the side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Order {
    pub agent_id: AgentId,
    pub signed_volume: i64,
    pub price: f64,
    pub submit_time: u64,
    /// Unfilled volume, always non-negative.
    pub remaining_volume: i64,
}

impl Order {
    pub fn new(
        agent_id: AgentId,
        signed_volume: i64,
        price: f64,
        submit_time: u64,
    ) -> Result<Self, ModelError> {
        let order = Order {
            agent_id,
            signed_volume,
            price,
            submit_time,
            remaining_volume: signed_volume.abs(),
        };
        order.validate()?;
        Ok(order)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.signed_volume == 0 {
            return Err(ModelError::InvalidOrder("zero volume".into()));
        }
        if !(self.price.is_finite() && self.price > 0.0) {
            return Err(ModelError::InvalidOrder(format!(
                "price must be positive and finite, got {}",
                self.price
            )));
        }
        if self.remaining_volume < 0 || self.remaining_volume > self.signed_volume.abs() {
            return Err(ModelError::InvalidOrder(format!(
                "remaining volume {} outside [0, {}]",
                self.remaining_volume,
                self.signed_volume.abs()
            )));
        }
        Ok(())
    }

    pub fn side(&self) -> Side {
        if self.signed_volume > 0 {
            Side::Buy
        } else {
            Side::Sell
        }
    }
}

/// One execution between a resting order and an incoming one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trade {
    pub step: u64,
    pub price: f64,
    pub volume: i64,
    pub buyer_id: AgentId,
    pub seller_id: AgentId,
}

impl Trade {
    pub fn notional(&self) -> f64 {
        self.price * self.volume as f64
    }
}
