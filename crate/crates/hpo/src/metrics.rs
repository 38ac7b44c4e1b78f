//! Search-behavior metrics over study logs: diversity of the explored
//! configurations, OOM rate, incumbent traces, and cross-seed aggregation.
//!
//! All diversity metrics operate on the normalized coordinates of the
//! continuous hyperparameters only (categoricals excluded) and consider only
//! successful trials; the OOM rate counts failures over all trials.

use serde::Serialize;

use crate::runner::{StudyLog, TrialPayload, TrialStatus};
use crate::space::SearchSpace;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("study space digest does not match the given space")]
    SpaceMismatch,
    #[error("no logs to aggregate")]
    Empty,
    #[error("logs mix methods or spaces: {0}")]
    Mixed(String),
}

/// Diversity summary of one study. `pairwise` and `step` need at least two
/// successful trials and are absent otherwise.
#[derive(Debug, Clone, Serialize)]
pub struct DiversityReport {
    /// Mean over HPs of the population standard deviation across trials.
    pub spread: f64,
    /// Mean L2 distance over all unordered pairs of successful trials.
    pub pairwise: Option<f64>,
    /// Mean L2 distance between consecutive successful trials.
    pub step: Option<f64>,
    /// Distinct bin vectors with 5 equal-width bins per HP.
    pub cells: usize,
    pub oom_rate: f64,
    pub n_trials: usize,
    pub n_successful: usize,
}

/// Number of equal-width bins per HP for the cell count.
pub const CELL_BINS: usize = 5;

fn successful_coords(log: &StudyLog, space: &SearchSpace) -> Vec<Vec<f64>> {
    log.records
        .iter()
        .filter(|r| r.status == TrialStatus::Ok)
        .filter_map(|r| match &r.payload {
            TrialPayload::Config(c) => space.normalize_continuous(c).ok(),
            TrialPayload::Code { .. } => None,
        })
        .collect()
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn bin_vector(coords: &[f64]) -> Vec<u8> {
    coords
        .iter()
        .map(|&u| ((u * CELL_BINS as f64).floor() as usize).min(CELL_BINS - 1) as u8)
        .collect()
}

/// Computes the diversity report for one study.
pub fn diversity(log: &StudyLog, space: &SearchSpace) -> Result<DiversityReport, MetricsError> {
    if log.header.space_digest != space.digest() {
        return Err(MetricsError::SpaceMismatch);
    }
    let coords = successful_coords(log, space);
    let n = coords.len();
    let dims = space.continuous_dims();

    let spread = if n == 0 {
        0.0
    } else {
        let mut total = 0.0;
        for d in 0..dims {
            let mean = coords.iter().map(|c| c[d]).sum::<f64>() / n as f64;
            let var = coords.iter().map(|c| (c[d] - mean).powi(2)).sum::<f64>() / n as f64;
            total += var.sqrt();
        }
        total / dims as f64
    };

    let pairwise = if n >= 2 {
        let mut total = 0.0;
        let mut count = 0usize;
        for i in 0..n {
            for j in (i + 1)..n {
                total += l2(&coords[i], &coords[j]);
                count += 1;
            }
        }
        Some(total / count as f64)
    } else {
        None
    };

    let step = if n >= 2 {
        let total: f64 = coords.windows(2).map(|w| l2(&w[0], &w[1])).sum();
        Some(total / (n - 1) as f64)
    } else {
        None
    };

    let cells = coords
        .iter()
        .map(|c| bin_vector(c))
        .collect::<std::collections::BTreeSet<_>>()
        .len();

    let n_trials = log.records.len();
    let failures = log
        .records
        .iter()
        .filter(|r| r.status != TrialStatus::Ok)
        .count();
    Ok(DiversityReport {
        spread,
        pairwise,
        step,
        cells,
        oom_rate: if n_trials == 0 {
            0.0
        } else {
            failures as f64 / n_trials as f64
        },
        n_trials,
        n_successful: n,
    })
}

/// One point of an incumbent trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePoint {
    pub trial_id: u64,
    pub cumulative_train_seconds: f64,
    pub best_so_far: f64,
    /// True when this trial strictly improved the best objective.
    pub incumbent: bool,
}

/// Best-so-far objective against cumulative training time, one point per
/// trial, with new incumbents flagged.
pub fn incumbent_trace(log: &StudyLog) -> Vec<TracePoint> {
    let mut best = f64::INFINITY;
    let mut elapsed = 0.0;
    log.records
        .iter()
        .map(|r| {
            elapsed += r.train_seconds;
            let incumbent = r.objective < best;
            if incumbent {
                best = r.objective;
            }
            TracePoint {
                trial_id: r.trial_id,
                cumulative_train_seconds: elapsed,
                best_so_far: best,
                incumbent,
            }
        })
        .collect()
}

/// Mean/std of best-so-far across seeds on a shared time grid, plus the
/// final-best scalar summary.
#[derive(Debug, Clone, Serialize)]
pub struct SeedCurve {
    /// Union of all per-seed event times, ascending.
    pub grid: Vec<f64>,
    pub mean_best: Vec<f64>,
    pub std_best: Vec<f64>,
    pub final_mean: f64,
    /// Population standard deviation of the final bests.
    pub final_std: f64,
    pub n_seeds: usize,
}

/// Aggregates several seeds of the same method: step-interpolates each
/// seed's best-so-far onto the union grid of event times (last value carried
/// forward) and reports pointwise mean and population std.
pub fn aggregate_seeds(logs: &[&StudyLog]) -> Result<SeedCurve, MetricsError> {
    if logs.is_empty() {
        return Err(MetricsError::Empty);
    }
    let method = &logs[0].header.method;
    let digest = &logs[0].header.space_digest;
    for log in logs {
        if &log.header.method != method {
            return Err(MetricsError::Mixed(format!(
                "{} vs {}",
                log.header.method, method
            )));
        }
        if &log.header.space_digest != digest {
            return Err(MetricsError::Mixed("space digest".to_string()));
        }
    }
    let traces: Vec<Vec<TracePoint>> = logs.iter().map(|l| incumbent_trace(l)).collect();
    let mut grid: Vec<f64> = traces
        .iter()
        .flat_map(|t| t.iter().map(|p| p.cumulative_train_seconds))
        .collect();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();

    let value_at = |trace: &[TracePoint], t: f64| -> f64 {
        let mut v = f64::INFINITY;
        for p in trace {
            if p.cumulative_train_seconds <= t {
                v = p.best_so_far;
            } else {
                break;
            }
        }
        v
    };
    let mut mean_best = Vec::with_capacity(grid.len());
    let mut std_best = Vec::with_capacity(grid.len());
    for &t in &grid {
        let vals: Vec<f64> = traces.iter().map(|tr| value_at(tr, t)).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        mean_best.push(mean);
        std_best.push(var.sqrt());
    }
    let finals: Vec<f64> = traces
        .iter()
        .map(|t| t.last().map(|p| p.best_so_far).unwrap_or(f64::INFINITY))
        .collect();
    let final_mean = finals.iter().sum::<f64>() / finals.len() as f64;
    let final_var =
        finals.iter().map(|v| (v - final_mean).powi(2)).sum::<f64>() / finals.len() as f64;
    Ok(SeedCurve {
        grid,
        mean_best,
        std_best,
        final_mean,
        final_std: final_var.sqrt(),
        n_seeds: logs.len(),
    })
}

/// Where trial-indexed convergence curves are cut off for reporting.
pub const TRACE_TRIAL_CAP: usize = 300;

/// Trial-indexed variant of a trace, capped at `max_trials` entries.
pub fn trial_indexed_trace(log: &StudyLog, max_trials: usize) -> Vec<TracePoint> {
    let mut trace = incumbent_trace(log);
    trace.truncate(max_trials);
    trace
}
