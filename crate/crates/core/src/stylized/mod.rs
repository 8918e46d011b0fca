//! Stylized-fact statistics of return series: fat tails, power-law tails, long memory
//! of absolute returns and the volume-volatility correlation.

mod moments;
mod report;
mod series;

pub use moments::{
    acorr_coefficient, excess_kurtosis, hill_tail_exponent, lagged_abs_correlation, pearson, power_law_exponent,
    volume_volatility_corr,
};
pub use report::{evaluate_series, write_report, StylizedCriteria, StylizedReport};
pub use series::{standardize, ReturnSeries};
