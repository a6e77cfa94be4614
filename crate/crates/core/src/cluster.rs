//! Grouping fail-annotated signals by first-violation time and assembling
//! the snapshot sequence.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checker::{Label, SignalAnnotation, ViolationInstance};
use crate::manifest::ModelManifest;
use crate::trace::BlockPath;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("cannot form {k} clusters from {points} points")]
    KExceedsPoints { k: usize, points: usize },
    #[error("error threshold must be positive, got {0}")]
    InvalidThreshold(f64),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("no mined property is violated")]
    NoViolations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedSignal {
    pub signal: String,
    pub time: f64,
}

impl TimedSignal {
    pub fn new(signal: impl Into<String>, time: f64) -> Self {
        Self {
            signal: signal.into(),
            time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub members: Vec<TimedSignal>,
    pub mean_time: f64,
    pub sse: f64,
}

impl Cluster {
    fn from_members(members: Vec<TimedSignal>) -> Self {
        let mean_time = members.iter().map(|m| m.time).sum::<f64>() / members.len() as f64;
        let sse = members.iter().map(|m| (m.time - mean_time).powi(2)).sum();
        Self {
            members,
            mean_time,
            sse,
        }
    }
}

pub fn total_sse(clusters: &[Cluster]) -> f64 {
    clusters.iter().map(|c| c.sse).sum()
}

fn sorted(points: &[TimedSignal]) -> Vec<TimedSignal> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| {
        a.time
            .total_cmp(&b.time)
            .then_with(|| a.signal.cmp(&b.signal))
    });
    p
}

/// Optimal k-means in one dimension. Clusters are contiguous runs of the
/// sorted points, found by dynamic programming over split positions, so the
/// result is the global SSE minimum and ties resolve to the earliest split.
pub fn kmeans_1d(points: &[TimedSignal], k: usize) -> Result<Vec<Cluster>, ClusterError> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(ClusterError::KExceedsPoints { k, points: n });
    }
    let pts = sorted(points);
    // cost[i][j]: SSE of pts[i..j], computed exactly as Cluster::from_members does
    let mut cost = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..n {
        for j in i + 1..=n {
            cost[i][j] = Cluster::from_members(pts[i..j].to_vec()).sse;
        }
    }
    // best[c][j]: minimal SSE of the first j points in c + 1 clusters
    let mut best = vec![vec![f64::INFINITY; n + 1]; k];
    let mut split = vec![vec![0usize; n + 1]; k];
    for j in 1..=n {
        best[0][j] = cost[0][j];
    }
    for c in 1..k {
        for j in c + 1..=n {
            for i in c..j {
                let v = best[c - 1][i] + cost[i][j];
                if v < best[c][j] {
                    best[c][j] = v;
                    split[c][j] = i;
                }
            }
        }
    }
    let mut bounds = vec![n];
    let mut j = n;
    for c in (1..k).rev() {
        j = split[c][j];
        bounds.push(j);
    }
    bounds.push(0);
    bounds.reverse();
    Ok(bounds
        .windows(2)
        .map(|w| Cluster::from_members(pts[w[0]..w[1]].to_vec()))
        .collect())
}

/// Smallest k whose total SSE is at most `threshold`, capped at the number
/// of distinct times.
pub fn elbow(points: &[TimedSignal], threshold: f64) -> Result<Vec<Cluster>, ClusterError> {
    if !(threshold > 0.0) {
        return Err(ClusterError::InvalidThreshold(threshold));
    }
    if points.is_empty() {
        return Err(ClusterError::KExceedsPoints { k: 1, points: 0 });
    }
    let distinct = points
        .iter()
        .map(|p| p.time.to_bits())
        .collect::<BTreeSet<_>>()
        .len();
    for k in 1..distinct {
        let clusters = kmeans_1d(points, k)?;
        if total_sse(&clusters) <= threshold {
            return Ok(clusters);
        }
    }
    kmeans_1d(points, distinct)
}

/// Default error threshold: every member within about 5% of the run length
/// of its cluster mean.
pub fn default_error_threshold(duration: f64, points: usize) -> f64 {
    (0.05 * duration).powi(2) * points as f64
}

/// Owning blocks of the cluster's signals together with all ancestors.
pub fn map_to_blocks(
    cluster: &Cluster,
    manifest: &ModelManifest,
) -> Result<Vec<BlockPath>, ClusterError> {
    let mut blocks = BTreeSet::new();
    for m in &cluster.members {
        let meta = manifest
            .variable(&m.signal)
            .ok_or_else(|| ClusterError::UnknownVariable(m.signal.clone()))?;
        blocks.extend(meta.block_path.with_ancestors());
    }
    Ok(blocks.into_iter().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub mean_time: f64,
    pub blocks: Vec<BlockPath>,
    pub properties: Vec<String>,
    pub signals: Vec<TimedSignal>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub error_threshold: f64,
    /// Total SSE for k = 1 up to the chosen k.
    pub sse_by_k: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
}

/// Clusters the Fail signals and turns each cluster into a snapshot. A
/// property lands in the snapshot that holds its earliest signal.
pub fn build_explanation(
    annotations: &[SignalAnnotation],
    violations: &[ViolationInstance],
    manifest: &ModelManifest,
    error_threshold: f64,
) -> Result<Explanation, ClusterError> {
    let points: Vec<TimedSignal> = annotations
        .iter()
        .filter(|a| a.label == Label::Fail)
        .map(|a| TimedSignal::new(a.signal.clone(), a.first_time.expect("Fail carries a time")))
        .collect();
    if points.is_empty() {
        return Err(ClusterError::NoViolations);
    }
    let clusters = elbow(&points, error_threshold)?;
    let sse_by_k = (1..=clusters.len())
        .map(|k| kmeans_1d(&points, k).map(|c| total_sse(&c)))
        .collect::<Result<Vec<_>, _>>()?;
    let cluster_of = |signal: &str| {
        clusters
            .iter()
            .position(|c| c.members.iter().any(|m| m.signal == signal))
    };
    let mut properties: Vec<Vec<String>> = vec![Vec::new(); clusters.len()];
    for v in violations {
        let earliest = v
            .signals
            .iter()
            .filter_map(|s| points.iter().find(|p| &p.signal == s))
            .min_by(|a, b| {
                a.time
                    .total_cmp(&b.time)
                    .then_with(|| a.signal.cmp(&b.signal))
            });
        if let Some(c) = earliest.and_then(|p| cluster_of(&p.signal)) {
            properties[c].push(v.property.clone());
        }
    }
    let snapshots = clusters
        .iter()
        .zip(properties)
        .map(|(c, properties)| {
            Ok(Snapshot {
                mean_time: c.mean_time,
                blocks: map_to_blocks(c, manifest)?,
                properties,
                signals: c.members.clone(),
            })
        })
        .collect::<Result<Vec<_>, ClusterError>>()?;
    Ok(Explanation {
        error_threshold,
        sse_by_k,
        snapshots,
    })
}

/// Human-readable rendering with one indented block tree per snapshot.
pub fn render_text(explanation: &Explanation) -> String {
    let mut out = String::new();
    for (i, s) in explanation.snapshots.iter().enumerate() {
        let _ = writeln!(out, "Snapshot {} at t = {:.3} s", i + 1, s.mean_time);
        let _ = writeln!(out, "  blocks:");
        for b in &s.blocks {
            let depth = b.segments().len();
            let name = b.segments().last().map(String::as_str).unwrap_or("");
            let _ = writeln!(out, "    {}{}", "  ".repeat(depth.saturating_sub(1)), name);
        }
        let _ = writeln!(out, "  properties: {}", s.properties.join(", "));
        let _ = writeln!(out, "  signals:");
        for m in &s.signals {
            let _ = writeln!(out, "    {} (first violated at {:.3} s)", m.signal, m.time);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(times: &[f64]) -> Vec<TimedSignal> {
        times
            .iter()
            .enumerate()
            .map(|(i, &t)| TimedSignal::new(format!("s{i:02}"), t))
            .collect()
    }

    fn means(c: &[Cluster]) -> Vec<f64> {
        c.iter().map(|c| c.mean_time).collect()
    }

    #[test]
    fn single_cluster_of_equal_times() {
        let c = kmeans_1d(&pts(&[2.0, 2.0, 2.0]), 1).unwrap();
        assert_eq!(means(&c), vec![2.0]);
        assert_eq!(c[0].sse, 0.0);
        assert_eq!(elbow(&pts(&[2.0, 2.0, 2.0]), 1e-6).unwrap().len(), 1);
    }

    #[test]
    fn two_pairs_split_apart() {
        let c = kmeans_1d(&pts(&[9.0, 1.0, 9.0, 1.0]), 2).unwrap();
        assert_eq!(means(&c), vec![1.0, 9.0]);
        assert_eq!(total_sse(&c), 0.0);
        let c = kmeans_1d(&pts(&[0.0, 10.0]), 2).unwrap();
        assert_eq!(
            c.iter().map(|c| c.members.len()).collect::<Vec<_>>(),
            vec![1, 1]
        );
    }

    #[test]
    fn too_many_clusters_is_an_error() {
        assert_eq!(
            kmeans_1d(&pts(&[1.0]), 2),
            Err(ClusterError::KExceedsPoints { k: 2, points: 1 })
        );
    }

    #[test]
    fn three_tight_groups() {
        let times = [1.0, 1.01, 0.99, 5.0, 5.02, 9.0, 8.99];
        let c = elbow(&pts(&times), default_error_threshold(10.0, times.len())).unwrap();
        assert_eq!(c.len(), 3);
    }

    #[test]
    fn tree_rendering() {
        let e = Explanation {
            error_threshold: 1.0,
            sse_by_k: vec![0.0],
            snapshots: vec![Snapshot {
                mean_time: 2.0,
                blocks: vec![BlockPath::from("root"), BlockPath::from("root/sensors")],
                properties: vec!["psi1".into()],
                signals: vec![TimedSignal::new("x", 2.0)],
            }],
        };
        let text = render_text(&e);
        assert!(text.contains("Snapshot 1 at t = 2.000 s"));
        assert!(text.contains("    root\n      sensors\n"));
    }
}
