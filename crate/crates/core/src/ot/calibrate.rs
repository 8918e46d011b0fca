use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;

use super::data::DataClouds;
use super::transport::aggregate_ot;
use crate::config::TailIndexing;
use crate::error::{Error, Result};
use crate::stylized::ReturnSeries;

/// One point of the trait-prior grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub id: usize,
    pub sigma_std: f64,
    pub alpha_std: f64,
    pub gamma_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationGrid {
    pub sigma_std: Vec<f64>,
    pub alpha_std: Vec<f64>,
    pub gamma_min: Vec<f64>,
    pub weights: [f64; 3],
}

impl CalibrationGrid {
    /// Candidates in sigma-major order.
    pub fn candidates(&self) -> Vec<Candidate> {
        let mut out = Vec::new();
        for &sigma_std in &self.sigma_std {
            for &alpha_std in &self.alpha_std {
                for &gamma_min in &self.gamma_min {
                    out.push(Candidate { id: out.len(), sigma_std, alpha_std, gamma_min });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudSettings {
    pub cloud_size: usize,
    pub tail_fraction: f64,
    pub indexing: TailIndexing,
}

/// `[OT_r, OT_t, OT_as, OT_bar]` averaged over trials, or the failure message.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub candidate: Candidate,
    pub scores: std::result::Result<[f64; 4], String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub rows: Vec<ScoreRow>,
    pub best: Option<Candidate>,
}

fn score_candidate<F>(c: &Candidate, real: &DataClouds, settings: &CloudSettings, weights: [f64; 3], pipeline: &F) -> Result<[f64; 4]>
where
    F: Fn(&Candidate) -> Result<Vec<ReturnSeries>>,
{
    let trials = pipeline(c)?;
    if trials.is_empty() {
        return Err(Error::validation("calibration.trials", "pipeline returned no trials"));
    }
    let mut sum = [0.0; 3];
    for (t, series) in trials.iter().enumerate() {
        let seed = ((c.id as u64) << 32) | t as u64;
        let clouds = DataClouds::build(series, settings.cloud_size, settings.tail_fraction, settings.indexing, seed)?;
        let d = clouds.distances(real)?;
        for k in 0..3 {
            sum[k] += d[k];
        }
    }
    let n = trials.len() as f64;
    let mean = sum.map(|s| s / n);
    Ok([mean[0], mean[1], mean[2], aggregate_ot(mean, weights)])
}

/// Scores every grid candidate not already scored in `previous` and returns the full
/// table with the minimiser of the weighted distance. Candidates are scored in parallel;
/// a failing candidate is recorded and skipped.
pub fn calibrate<F>(
    grid: &CalibrationGrid,
    real: &DataClouds,
    settings: &CloudSettings,
    pipeline: F,
    previous: &[ScoreRow],
) -> CalibrationResult
where
    F: Fn(&Candidate) -> Result<Vec<ReturnSeries>> + Sync,
{
    let done: BTreeMap<usize, &ScoreRow> =
        previous.iter().filter(|r| r.scores.is_ok()).map(|r| (r.candidate.id, r)).collect();
    let rows: Vec<ScoreRow> = grid
        .candidates()
        .into_par_iter()
        .map(|c| match done.get(&c.id) {
            Some(&row) if row.candidate == c => row.clone(),
            _ => ScoreRow {
                candidate: c,
                scores: score_candidate(&c, real, settings, grid.weights, &pipeline).map_err(|e| e.to_string()),
            },
        })
        .collect();
    let best = rows
        .iter()
        .filter_map(|r| r.scores.as_ref().ok().map(|s| (r.candidate, s[3])))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(c, _)| c);
    CalibrationResult { rows, best }
}

const HEADER: [&str; 8] = ["candidate_id", "λ_σ", "λ_α", "λ_γ", "OT_r", "OT_t", "OT_as", "OT_bar"];

/// Failed candidates are written with empty distance fields.
pub fn write_score_table<W: Write>(out: W, rows: &[ScoreRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        let c = r.candidate;
        let mut rec = vec![c.id.to_string(), c.sigma_std.to_string(), c.alpha_std.to_string(), c.gamma_min.to_string()];
        match &r.scores {
            Ok(s) => rec.extend(s.iter().map(f64::to_string)),
            Err(_) => rec.extend(std::iter::repeat_n(String::new(), 4)),
        }
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a table written by [`write_score_table`]; rows with empty distances come back
/// as failures so a resumed sweep recomputes them.
pub fn read_score_table<R: Read>(input: R) -> std::result::Result<Vec<ScoreRow>, String> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers().map_err(|e| e.to_string())?;
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err("unexpected score table header".into());
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| format!("row {}: {e}", i + 2))?;
        let num = |k: usize| rec.get(k).unwrap_or("").parse::<f64>();
        let id = rec.get(0).unwrap_or("").parse::<usize>().map_err(|e| format!("row {}: {e}", i + 2))?;
        let (Ok(sigma_std), Ok(alpha_std), Ok(gamma_min)) = (num(1), num(2), num(3)) else {
            return Err(format!("row {}: malformed candidate", i + 2));
        };
        let scores = match (num(4), num(5), num(6), num(7)) {
            (Ok(a), Ok(b), Ok(c), Ok(d)) => Ok([a, b, c, d]),
            _ => Err("not scored".to_string()),
        };
        rows.push(ScoreRow { candidate: Candidate { id, sigma_std, alpha_std, gamma_min }, scores });
    }
    Ok(rows)
}
