use super::traits::AgentState;
use crate::market::Trade;

/// Applies executed trades to agent cash and positions. Negative cash is allowed.
pub fn settle_trades(states: &mut [AgentState], trades: &[Trade]) {
    for t in trades {
        let notional = t.notional();
        let buyer = &mut states[t.buyer_id];
        buyer.cash -= notional;
        buyer.position += t.volume;
        let seller = &mut states[t.seller_id];
        seller.cash += notional;
        seller.position -= t.volume;
    }
}
