/// Fixed-width aggregation of a step series.
#[derive(Debug, Clone, PartialEq)]
pub struct Bars {
    pub log_returns: Vec<f64>,
    pub volumes: Vec<f64>,
}

/// Bar `b` covers steps `(b*w, (b+1)*w]`: its return is `ln(mid[(b+1)w] / mid[b w])`
/// and its volume the executed volume over those steps. A trailing partial bar is dropped.
pub fn bar_series(mids: &[f64], volumes: &[i64], steps_per_bar: usize) -> Bars {
    assert!(steps_per_bar >= 1);
    assert_eq!(mids.len(), volumes.len());
    let n_bars = mids.len().saturating_sub(1) / steps_per_bar;
    let mut out = Bars { log_returns: Vec::with_capacity(n_bars), volumes: Vec::with_capacity(n_bars) };
    for b in 0..n_bars {
        let (s, e) = (b * steps_per_bar, (b + 1) * steps_per_bar);
        out.log_returns.push((mids[e] / mids[s]).ln());
        out.volumes.push(volumes[s + 1..=e].iter().sum::<i64>() as f64);
    }
    out
}
