use std::io::Write;

use super::book::OrderBook;
use super::order::{Side, Trade};

/// Writes `step,price,volume,buyer_id,seller_id`.
pub fn write_trades<W: Write>(out: W, trades: &[Trade]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "price", "volume", "buyer_id", "seller_id"])?;
    for t in trades {
        w.write_record([
            t.step.to_string(),
            t.price.to_string(),
            t.volume.to_string(),
            t.buyer_id.to_string(),
            t.seller_id.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `side,price,volume` with each side listed best level first, bids before asks.
pub fn write_book_snapshot<W: Write>(out: W, book: &OrderBook) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["side", "price", "volume"])?;
    for side in [Side::Buy, Side::Sell] {
        for (price, volume) in book.levels(side) {
            w.write_record([side.as_str().to_string(), price.to_string(), volume.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
