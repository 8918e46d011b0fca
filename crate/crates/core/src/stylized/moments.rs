use crate::error::ModelError;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Fourth standardised central moment minus 3, from population moments.
pub fn excess_kurtosis(xs: &[f64]) -> Result<f64, ModelError> {
    if xs.len() < 4 {
        return Err(ModelError::InsufficientData { needed: 4, have: xs.len() });
    }
    let m = mean(xs);
    let (mut m2, mut m4) = (0.0, 0.0);
    for &x in xs {
        let d2 = (x - m) * (x - m);
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= xs.len() as f64;
    m4 /= xs.len() as f64;
    if m2 <= 0.0 {
        return Err(ModelError::Degenerate("zero variance".into()));
    }
    Ok(m4 / (m2 * m2) - 3.0)
}

/// Hill estimate of the tail index from the `k` largest values against the (k+1)-th.
pub fn hill_tail_exponent(samples: &[f64], k: usize) -> Result<f64, ModelError> {
    if k == 0 || k >= samples.len() {
        return Err(ModelError::InvalidParameter {
            name: "k",
            reason: format!("need 1 <= k < N = {}, got {k}", samples.len()),
        });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let threshold = sorted[k];
    if !(threshold > 0.0) {
        return Err(ModelError::Degenerate(format!("order statistic {} is {threshold}", k + 1)));
    }
    let mean_log = sorted[..k].iter().map(|x| (x / threshold).ln()).sum::<f64>() / k as f64;
    if mean_log <= 0.0 {
        return Err(ModelError::Degenerate("top order statistics are all equal".into()));
    }
    Ok(1.0 / mean_log)
}

/// Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, ModelError> {
    if x.len() != y.len() {
        return Err(ModelError::DimensionMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 3 {
        return Err(ModelError::InsufficientData { needed: 3, have: x.len() });
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(ModelError::Degenerate("zero variance".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Correlation of `|r_t|` with `|r_{t+lag}|`, pooling pairs from every day.
pub fn lagged_abs_correlation(days: &[Vec<f64>], lag: usize) -> Result<f64, ModelError> {
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for d in days {
        for t in 0..d.len().saturating_sub(lag) {
            a.push(d[t].abs());
            b.push(d[t + lag].abs());
        }
    }
    pearson(&a, &b)
}

/// Least-squares decay exponent of a correlation profile: `-slope` of `ln corr` on
/// `ln lag`, over lags whose correlation is positive. Needs at least three such lags.
pub fn power_law_exponent(lags: &[usize], corrs: &[f64]) -> Result<f64, ModelError> {
    if lags.len() != corrs.len() {
        return Err(ModelError::DimensionMismatch { left: lags.len(), right: corrs.len() });
    }
    let pts: Vec<(f64, f64)> = lags
        .iter()
        .zip(corrs)
        .filter(|(&l, &c)| l >= 1 && c > 0.0 && c.is_finite())
        .map(|(&l, &c)| ((l as f64).ln(), c.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(ModelError::InsufficientData { needed: 3, have: pts.len() });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(-sxy / sxx)
}

/// Decay exponent of the absolute-return autocorrelation over `lags`.
pub fn acorr_coefficient(days: &[Vec<f64>], lags: &[usize]) -> Result<f64, ModelError> {
    let corrs: Vec<f64> = lags.iter().map(|&l| lagged_abs_correlation(days, l).unwrap_or(f64::NAN)).collect();
    power_law_exponent(lags, &corrs)
}

/// Correlation between per-bar executed volume and absolute return.
pub fn volume_volatility_corr(volumes: &[f64], abs_returns: &[f64]) -> Result<f64, ModelError> {
    pearson(volumes, abs_returns)
}
