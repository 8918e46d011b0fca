use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::cloud::{build_acorr_cloud, build_return_cloud, build_tail_cloud, PointCloud};
use super::transport::ot_distance;
use crate::config::TailIndexing;
use crate::error::{Error, ModelError, Result};
use crate::stylized::ReturnSeries;

/// Reads `day,bar,log_return[,volume]` rows and standardises each day.
pub fn read_bars_csv(path: &Path) -> Result<ReturnSeries> {
    let csv_err = |row: usize, message: String| Error::Csv { path: path.to_path_buf(), row, message };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(0, e.to_string()))?;
    let headers = reader.headers().map_err(|e| csv_err(1, e.to_string()))?.clone();
    let names: Vec<&str> = headers.iter().collect();
    let has_volume = match names.as_slice() {
        ["day", "bar", "log_return"] => false,
        ["day", "bar", "log_return", "volume"] => true,
        _ => {
            return Err(csv_err(1, format!("expected header day,bar,log_return[,volume], found {}", names.join(","))))
        }
    };
    let mut days: BTreeMap<i64, Vec<(i64, f64, f64)>> = BTreeMap::new();
    for (idx, rec) in reader.records().enumerate() {
        let row = idx + 2;
        let rec = rec.map_err(|e| csv_err(row, e.to_string()))?;
        let field = |k: usize, name: &str| -> Result<f64> {
            let raw = rec.get(k).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| csv_err(row, format!("{name}: cannot parse {raw:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(csv_err(row, format!("{name}: non-finite value")))
            }
        };
        let day = rec.get(0).unwrap_or("").parse::<i64>().map_err(|_| csv_err(row, "day: expected an integer".into()))?;
        let bar = rec.get(1).unwrap_or("").parse::<i64>().map_err(|_| csv_err(row, "bar: expected an integer".into()))?;
        let r = field(2, "log_return")?;
        let v = if has_volume { field(3, "volume")? } else { 0.0 };
        days.entry(day).or_default().push((bar, r, v));
    }
    if days.is_empty() {
        return Err(csv_err(1, "no data rows".into()));
    }
    let mut returns = Vec::with_capacity(days.len());
    let mut volumes = Vec::with_capacity(days.len());
    for (day, mut rows) in days {
        rows.sort_by_key(|r| r.0);
        if rows.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(csv_err(0, format!("day {day}: duplicate bar index")));
        }
        returns.push(rows.iter().map(|r| r.1).collect());
        volumes.push(rows.iter().map(|r| r.2).collect());
    }
    ReturnSeries::from_raw(returns, has_volume.then_some(volumes))
        .map_err(|e| Error::Csv { path: path.to_path_buf(), row: 0, message: e.to_string() })
}

/// Writes raw per-bar log returns and volumes in the real-data layout.
pub fn write_bars_csv<W: Write>(out: W, days: &[(Vec<f64>, Vec<f64>)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["day", "bar", "log_return", "volume"])?;
    for (d, (returns, volumes)) in days.iter().enumerate() {
        for (b, (r, v)) in returns.iter().zip(volumes).enumerate() {
            w.write_record([d.to_string(), b.to_string(), r.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// The three clouds of one data set, each capped at `cloud_size` points.
#[derive(Debug, Clone, PartialEq)]
pub struct DataClouds {
    pub returns: PointCloud,
    pub tail: PointCloud,
    pub acorr: PointCloud,
}

impl DataClouds {
    pub fn build(
        series: &ReturnSeries,
        cloud_size: usize,
        tail_fraction: f64,
        indexing: TailIndexing,
        seed: u64,
    ) -> Result<Self, ModelError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = ((tail_fraction * series.n_samples() as f64).ceil() as usize).max(1);
        Ok(DataClouds {
            returns: build_return_cloud(series)?.subsample(cloud_size, &mut rng),
            tail: build_tail_cloud(series, k, indexing)?.subsample(cloud_size, &mut rng),
            acorr: build_acorr_cloud(series)?.subsample(cloud_size, &mut rng),
        })
    }

    /// `[OT_r, OT_t, OT_as]` from `self` (synthetic) to `real`.
    pub fn distances(&self, real: &DataClouds) -> Result<[f64; 3], ModelError> {
        Ok([
            ot_distance(&self.returns, &real.returns)?,
            ot_distance(&self.tail, &real.tail)?,
            ot_distance(&self.acorr, &real.acorr)?,
        ])
    }
}
