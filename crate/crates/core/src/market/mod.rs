//! Limit-order-book market: orders, matching, the fundamental price and trade logs.

mod book;
pub mod export;
mod fundamental;
mod order;

pub use book::{Lifetime, OrderBook, RestingOrder};
pub use fundamental::{FundamentalProcess, MarketClock};
pub use order::{AgentId, Order, Side, Trade};
