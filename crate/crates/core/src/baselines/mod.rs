//! Reference traders: zero-intelligence, fundamentalist-chartist-noise and its adaptive variant.

mod adfcn;
mod fcn;
mod zi;

pub use adfcn::{adfcn_update_and_order, AdaptiveState, Strategy};
pub use fcn::{chartist_return, fcn_forecast, fcn_order, order_from_forecast, FcnParams, FcnPriors};
pub use zi::{zi_order, ZiParams};
