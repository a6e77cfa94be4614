//! Removal of redundant variables by zero-lag correlation across passing
//! traces.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manifest::ModelManifest;
use crate::trace::{Domain, Trace, TraceError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrelationError {
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("no passing traces to correlate")]
    NoPassingTraces,
    #[error("threshold {0} outside (0, 1]")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Pearson correlation of two equally long series.
///
/// Two identical constant series correlate with 1; a constant series and
/// any different series correlate with 0.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64, CorrelationError> {
    if a.len() != b.len() {
        return Err(CorrelationError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(CorrelationError::TooFewSamples(a.len()));
    }
    if a == b {
        return Ok(1.0);
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    let constant = |s: &[f64]| s.iter().all(|&v| v == s[0]);
    if constant(a) || constant(b) || saa == 0.0 || sbb == 0.0 {
        return Ok(0.0);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Removal {
    pub removed: String,
    pub representative: String,
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub threshold: f64,
    /// Analyzed (Real and Boolean) variables that survived, in declaration order.
    pub kept: Vec<String>,
    pub removed: Vec<Removal>,
    /// Enumerated variables, which are never correlated and always kept.
    pub unanalyzed: Vec<String>,
}

impl ReductionReport {
    /// Every variable that takes part in mining, in declaration order.
    pub fn significant(&self, manifest: &ModelManifest) -> Vec<String> {
        manifest
            .variables
            .iter()
            .map(|v| &v.name)
            .filter(|n| self.kept.contains(n) || self.unanalyzed.contains(n))
            .cloned()
            .collect()
    }

    /// Share of all variables removed, in percent.
    pub fn reduction_percent(&self) -> f64 {
        let total = self.kept.len() + self.removed.len() + self.unanalyzed.len();
        if total == 0 {
            0.0
        } else {
            100.0 * self.removed.len() as f64 / total as f64
        }
    }
}

/// Uniform grid over `[0, end]` with the trace's smallest median sampling
/// interval as step.
fn shared_grid(trace: &Trace) -> Vec<f64> {
    let end = trace.end();
    let step = trace.min_median_interval().unwrap_or(end);
    let n = (end / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|k| k as f64 * step).collect();
    if let Some(last) = grid.last_mut() {
        if *last > end {
            *last = end;
        }
    }
    grid
}

/// Values of `name` on `grid`; signals that stop early hold their last value.
pub(crate) fn series_on(trace: &Trace, name: &str, grid: &[f64]) -> Result<Vec<f64>, TraceError> {
    let s = trace.require(name)?;
    let last = s.last_time();
    grid.iter().map(|&t| s.code_at(t.min(last))).collect()
}

/// Greedy reduction: for every pair (i, j), i before j in declaration
/// order, j is removed when |pearson| exceeds `threshold` and i is still
/// kept.
pub fn reduce_variables(
    passing: &[Trace],
    manifest: &ModelManifest,
    threshold: f64,
) -> Result<ReductionReport, CorrelationError> {
    if passing.is_empty() {
        return Err(CorrelationError::NoPassingTraces);
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(CorrelationError::InvalidThreshold(threshold));
    }
    let (analyzed, unanalyzed): (Vec<_>, Vec<_>) = manifest
        .variables
        .iter()
        .partition(|v| !matches!(v.domain, Domain::Enum(_)));
    let grids: Vec<Vec<f64>> = passing.iter().map(shared_grid).collect();
    let mut series = Vec::with_capacity(analyzed.len());
    for v in &analyzed {
        let mut all = Vec::new();
        for (tr, grid) in passing.iter().zip(&grids) {
            all.extend(series_on(tr, &v.name, grid)?);
        }
        series.push(all);
    }
    let mut removed_by: Vec<Option<(usize, f64)>> = vec![None; analyzed.len()];
    for i in 0..analyzed.len() {
        if removed_by[i].is_some() {
            continue;
        }
        for j in i + 1..analyzed.len() {
            if removed_by[j].is_some() {
                continue;
            }
            let r = pearson(&series[i], &series[j])?;
            if r.abs() > threshold {
                log::debug!(
                    "{} duplicates {} (r = {r})",
                    analyzed[j].name,
                    analyzed[i].name
                );
                removed_by[j] = Some((i, r));
            }
        }
    }
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for (j, v) in analyzed.iter().enumerate() {
        match removed_by[j] {
            None => kept.push(v.name.clone()),
            Some((i, r)) => removed.push(Removal {
                removed: v.name.clone(),
                representative: analyzed[i].name.clone(),
                correlation: r,
            }),
        }
    }
    Ok(ReductionReport {
        threshold,
        kept,
        removed,
        unanalyzed: unanalyzed.iter().map(|v| v.name.clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_reference_values() {
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&[2.0, 2.0], &[2.0, 2.0]).unwrap(), 1.0);
        assert_eq!(pearson(&[2.0, 2.0], &[1.0, 3.0]).unwrap(), 0.0);
        assert!(matches!(
            pearson(&[1.0], &[1.0]),
            Err(CorrelationError::TooFewSamples(1))
        ));
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0]),
            Err(CorrelationError::LengthMismatch(2, 1))
        ));
    }
}
