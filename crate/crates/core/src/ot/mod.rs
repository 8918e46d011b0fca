//! Point-cloud features of return data, exact OT distances and the calibration sweep.

mod calibrate;
mod cloud;
mod data;
mod transport;

pub use calibrate::{
    calibrate, read_score_table, write_score_table, CalibrationGrid, CalibrationResult, Candidate, CloudSettings,
    ScoreRow,
};
pub use cloud::{build_acorr_cloud, build_return_cloud, build_tail_cloud, PointCloud, ACORR_LAGS};
pub use data::{read_bars_csv, write_bars_csv, DataClouds};
pub use transport::{aggregate_ot, ot_distance, ot_plan, solve_transport, sq_euclidean_costs, TransportPlan};
