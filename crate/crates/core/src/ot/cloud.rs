use rand::seq::index::sample;
use rand::Rng;

use crate::config::TailIndexing;
use crate::error::ModelError;
use crate::stylized::ReturnSeries;

/// Lags (in bars) of the autocorrelation point coordinates.
pub const ACORR_LAGS: [usize; 9] = [0, 1, 10, 20, 30, 40, 50, 60, 70];

/// `len x dim` matrix of points, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    data: Vec<f64>,
    dim: usize,
}

impl PointCloud {
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self, ModelError> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(ModelError::DimensionMismatch { left: data.len(), right: dim });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(ModelError::Degenerate("non-finite point coordinate".into()));
        }
        Ok(PointCloud { data, dim })
    }

    pub fn from_scalars(xs: &[f64]) -> Self {
        PointCloud::new(xs.to_vec(), 1).expect("finite scalars")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Uniform subsample without replacement down to `max_points`, keeping row order.
    pub fn subsample<R: Rng + ?Sized>(&self, max_points: usize, rng: &mut R) -> PointCloud {
        if self.len() <= max_points {
            return self.clone();
        }
        let mut idx = sample(rng, self.len(), max_points).into_vec();
        idx.sort_unstable();
        let data = idx.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        PointCloud { data, dim: self.dim }
    }
}

/// One point per standardised return.
pub fn build_return_cloud(series: &ReturnSeries) -> Result<PointCloud, ModelError> {
    let pooled = series.pooled();
    if pooled.is_empty() {
        return Err(ModelError::InsufficientData { needed: 1, have: 0 });
    }
    PointCloud::new(pooled, 1)
}

/// `K` tail log-ratios of the pooled absolute returns.
///
/// With `r_(1) >= ... >= r_(N)`, [`TailIndexing::Hill`] gives `ln(r_(k) / r_(K+1))` for
/// `k = 1..K`, the terms averaged by the Hill estimator. [`TailIndexing::Literal`] gives
/// `ln(r_(N-k+1) / r_(N-K))`.
pub fn build_tail_cloud(series: &ReturnSeries, k: usize, indexing: TailIndexing) -> Result<PointCloud, ModelError> {
    let mut abs = series.pooled_abs();
    let n = abs.len();
    if k == 0 || k >= n {
        return Err(ModelError::InvalidParameter { name: "k", reason: format!("need 1 <= K < N = {n}, got {k}") });
    }
    abs.sort_by(|a, b| b.total_cmp(a));
    // order statistic r_(m), 1-based
    let r = |m: usize| abs[m - 1];
    let (den, nums): (f64, Vec<f64>) = match indexing {
        TailIndexing::Hill => (r(k + 1), (1..=k).map(r).collect()),
        TailIndexing::Literal => (r(n - k), (1..=k).map(|i| r(n - i + 1)).collect()),
    };
    if !(den > 0.0) {
        return Err(ModelError::Degenerate("zero order statistic in the tail denominator".into()));
    }
    if nums.iter().any(|&x| !(x > 0.0)) {
        return Err(ModelError::Degenerate("zero order statistic in the tail numerators".into()));
    }
    PointCloud::new(nums.iter().map(|x| (x / den).ln()).collect(), 1)
}

/// One 9-dimensional point per start index: absolute returns at the offsets in [`ACORR_LAGS`].
pub fn build_acorr_cloud(series: &ReturnSeries) -> Result<PointCloud, ModelError> {
    let span = ACORR_LAGS[ACORR_LAGS.len() - 1];
    let mut data = Vec::new();
    for day in &series.days {
        if day.len() <= span {
            return Err(ModelError::InsufficientData { needed: span + 1, have: day.len() });
        }
        for t in 0..day.len() - span {
            data.extend(ACORR_LAGS.iter().map(|&lag| day[t + lag].abs()));
        }
    }
    PointCloud::new(data, ACORR_LAGS.len())
}
