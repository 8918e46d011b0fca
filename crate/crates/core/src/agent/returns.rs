use crate::error::ModelError;

fn check(prices: &[f64], t_prev: usize, t_now: usize) -> Result<(), ModelError> {
    if t_now <= t_prev {
        return Err(ModelError::EmptyInterval { start: t_prev, end: t_now });
    }
    if t_now >= prices.len() {
        return Err(ModelError::InsufficientData { needed: t_now + 1, have: prices.len() });
    }
    Ok(())
}

fn step_returns(prices: &[f64], t_prev: usize, t_now: usize) -> impl Iterator<Item = f64> + '_ {
    (t_prev + 1..=t_now).map(move |t| (prices[t] / prices[t - 1]).ln())
}

/// Mean per-step log return of `prices` over `(t_prev, t_now]`, where `prices[t]` is the
/// mid price recorded at step `t`.
pub fn log_return(prices: &[f64], t_prev: usize, t_now: usize) -> Result<f64, ModelError> {
    check(prices, t_prev, t_now)?;
    let n = (t_now - t_prev) as f64;
    Ok(step_returns(prices, t_prev, t_now).sum::<f64>() / n)
}

/// Mean squared deviation of the per-step log returns over `(t_prev, t_now]` from their mean.
pub fn realized_volatility(prices: &[f64], t_prev: usize, t_now: usize) -> Result<f64, ModelError> {
    let mean = log_return(prices, t_prev, t_now)?;
    let n = (t_now - t_prev) as f64;
    Ok(step_returns(prices, t_prev, t_now).map(|r| (r - mean).powi(2)).sum::<f64>() / n)
}
