use std::io::Write;

use super::moments::{acorr_coefficient, excess_kurtosis, hill_tail_exponent, volume_volatility_corr};
use super::series::ReturnSeries;

/// Thresholds behind the pass flags.
#[derive(Debug, Clone, PartialEq)]
pub struct StylizedCriteria {
    pub tail_band: [f64; 2],
    pub tail_fraction: f64,
    pub lags: Vec<usize>,
}

impl StylizedCriteria {
    pub fn new(tail_band: [f64; 2], tail_fraction: f64, max_lag: usize) -> Self {
        StylizedCriteria { tail_band, tail_fraction, lags: (1..=max_lag).collect() }
    }
}

/// The four statistics, `NaN` where a statistic could not be computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StylizedReport {
    pub kurtosis: f64,
    pub tail_exponent: f64,
    pub acorr_coef: f64,
    pub vv_corr: f64,
    pub kurtosis_pass: bool,
    pub tail_pass: bool,
    pub acorr_pass: bool,
    pub vv_pass: bool,
}

pub fn evaluate_series(series: &ReturnSeries, criteria: &StylizedCriteria) -> StylizedReport {
    let pooled = series.pooled();
    let abs = series.pooled_abs();
    let kurtosis = excess_kurtosis(&pooled).unwrap_or(f64::NAN);
    let k = ((criteria.tail_fraction * abs.len() as f64).ceil() as usize).max(1);
    let tail_exponent = hill_tail_exponent(&abs, k).unwrap_or(f64::NAN);
    let acorr_coef = acorr_coefficient(&series.days, &criteria.lags).unwrap_or(f64::NAN);
    let vv_corr = match &series.volumes {
        Some(v) => volume_volatility_corr(&v.concat(), &abs).unwrap_or(f64::NAN),
        None => f64::NAN,
    };
    StylizedReport {
        kurtosis,
        tail_exponent,
        acorr_coef,
        vv_corr,
        kurtosis_pass: kurtosis > 0.0,
        tail_pass: criteria.tail_band[0] <= tail_exponent && tail_exponent <= criteria.tail_band[1],
        acorr_pass: 0.0 < acorr_coef && acorr_coef < 1.0,
        vv_pass: vv_corr > 0.0,
    }
}

/// `metric,value,pass` lines.
pub fn write_report<W: Write>(out: W, r: &StylizedReport) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["metric", "value", "pass"])?;
    for (name, value, pass) in [
        ("kurtosis", r.kurtosis, r.kurtosis_pass),
        ("tail_exponent", r.tail_exponent, r.tail_pass),
        ("acorr_coef", r.acorr_coef, r.acorr_pass),
        ("vv_corr", r.vv_corr, r.vv_pass),
    ] {
        w.write_record([name.to_string(), value.to_string(), pass.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
