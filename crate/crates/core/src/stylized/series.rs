use crate::error::ModelError;

/// Per-day standardised log returns, with the matching per-bar volumes when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub days: Vec<Vec<f64>>,
    pub volumes: Option<Vec<Vec<f64>>>,
}

/// Shifts and scales `xs` to sample mean 0 and sample (n-1) std 1.
pub fn standardize(xs: &[f64]) -> Result<Vec<f64>, ModelError> {
    if xs.len() < 2 {
        return Err(ModelError::InsufficientData { needed: 2, have: xs.len() });
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt();
    if !(sd > 0.0) {
        return Err(ModelError::Degenerate("constant return series cannot be standardised".into()));
    }
    Ok(xs.iter().map(|x| (x - m) / sd).collect())
}

impl ReturnSeries {
    /// Standardises each day of raw log returns.
    pub fn from_raw(days: Vec<Vec<f64>>, volumes: Option<Vec<Vec<f64>>>) -> Result<Self, ModelError> {
        if days.is_empty() {
            return Err(ModelError::InsufficientData { needed: 1, have: 0 });
        }
        if let Some(v) = &volumes {
            if v.len() != days.len() || v.iter().zip(&days).any(|(a, b)| a.len() != b.len()) {
                return Err(ModelError::DimensionMismatch { left: v.len(), right: days.len() });
            }
        }
        let days = days.iter().map(|d| standardize(d)).collect::<Result<Vec<_>, _>>()?;
        Ok(ReturnSeries { days, volumes })
    }

    pub fn n_samples(&self) -> usize {
        self.days.iter().map(Vec::len).sum()
    }

    pub fn pooled(&self) -> Vec<f64> {
        self.days.concat()
    }

    pub fn pooled_abs(&self) -> Vec<f64> {
        self.days.iter().flatten().map(|r| r.abs()).collect()
    }
}
