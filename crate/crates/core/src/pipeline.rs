//! The testing, mining and explaining phases chained over loaded traces,
//! and the report they produce.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::checker::{
    annotate_signals, check_failing_trace, CheckError, Label, SignalAnnotation, ViolationInstance,
};
use crate::cluster::{build_explanation, render_text, ClusterError, Explanation};
use crate::correlation::{reduce_variables, CorrelationError, ReductionReport};
use crate::manifest::ModelManifest;
use crate::miner::{mine, MinedProperty, MinerError, MiningConfig, SpecEntry};
use crate::stl::{self, EvalError, EvalOptions, Formula};
use crate::trace::{load_trace, Trace, TraceError, Verdict};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("trace `{id}`: {error}")]
    Trace { id: String, error: TraceError },
    #[error("requirement: {0}")]
    Requirement(EvalError),
    #[error("no passing traces")]
    NoPassingTraces,
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
    #[error(transparent)]
    Miner(#[from] MinerError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error("invalid threshold {name} = {value}")]
    InvalidThreshold { name: &'static str, value: f64 },
}

/// Every tunable constant of a run; copied verbatim into the report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub corr: f64,
    pub significance: f64,
    pub elbow_factor: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
    pub eq_tolerance: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            corr: 0.99,
            significance: 0.99,
            elbow_factor: 0.05,
            grid_step: None,
            eq_tolerance: 0.0,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let unit = [
            ("corr", self.corr),
            ("significance", self.significance),
            ("elbow_factor", self.elbow_factor),
        ];
        for (name, value) in unit {
            if !(value > 0.0 && value <= 1.0) {
                return Err(PipelineError::InvalidThreshold { name, value });
            }
        }
        if let Some(h) = self.grid_step.filter(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(PipelineError::InvalidThreshold {
                name: "grid_step",
                value: h,
            });
        }
        if !(self.eq_tolerance >= 0.0) {
            return Err(PipelineError::InvalidThreshold {
                name: "eq_tolerance",
                value: self.eq_tolerance,
            });
        }
        Ok(())
    }

    fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            eq_tolerance: self.eq_tolerance,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A loaded trace with its identifier and the hash of its source text.
#[derive(Debug, Clone)]
pub struct NamedTrace {
    pub id: String,
    pub sha256: String,
    pub trace: Trace,
}

impl NamedTrace {
    pub fn load(id: &str, csv: &str, manifest: &ModelManifest) -> Result<Self, PipelineError> {
        let trace = load_trace(csv, manifest).map_err(|error| PipelineError::Trace {
            id: id.to_string(),
            error,
        })?;
        Ok(Self {
            id: id.to_string(),
            sha256: sha256_hex(csv.as_bytes()),
            trace,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceVerdict {
    pub trace: String,
    pub verdict: Verdict,
    pub sha256: String,
}

/// Labels every trace with its verdict against `requirement`.
pub fn monitor(
    traces: &mut [NamedTrace],
    requirement: &Formula,
) -> Result<Vec<TraceVerdict>, PipelineError> {
    traces
        .iter_mut()
        .map(|t| {
            let verdict =
                stl::verdict(requirement, &t.trace).map_err(PipelineError::Requirement)?;
            t.trace.set_verdict(verdict);
            Ok(TraceVerdict {
                trace: t.id.clone(),
                verdict,
                sha256: t.sha256.clone(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningResult {
    pub reduction: ReductionReport,
    pub properties: Vec<MinedProperty>,
}

/// Correlation reduction followed by invariant mining on the passing traces.
pub fn mine_passing(
    traces: &[NamedTrace],
    manifest: &ModelManifest,
    thresholds: &Thresholds,
) -> Result<MiningResult, PipelineError> {
    thresholds.validate()?;
    let passing: Vec<Trace> = traces
        .iter()
        .filter(|t| t.trace.verdict() == Some(Verdict::Pass))
        .map(|t| t.trace.clone())
        .collect();
    if passing.is_empty() {
        return Err(PipelineError::NoPassingTraces);
    }
    let reduction = reduce_variables(&passing, manifest, thresholds.corr)?;
    let significant = reduction.significant(manifest);
    let config = MiningConfig {
        significance: thresholds.significance,
        grid_step: thresholds.grid_step,
    };
    let properties = mine(&passing, manifest, &significant, &config)?;
    log::info!(
        "{} variables, {} significant, {} properties",
        manifest.variables.len(),
        significant.len(),
        properties.len()
    );
    Ok(MiningResult {
        reduction,
        properties,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplanationStatus {
    Explained,
    /// The requirement failed but no mined property is violated.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceExplanation {
    pub trace: String,
    pub sha256: String,
    pub status: ExplanationStatus,
    pub violations: Vec<ViolationInstance>,
    /// Fail-annotated signals only.
    pub fail_signals: Vec<SignalAnnotation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explanation: Option<Explanation>,
    /// Share of all model variables absent from the explanation, in percent.
    pub scope_reduction_percent: f64,
}

/// Checks one failing trace against `spec` and clusters what it violates.
pub fn explain_trace(
    failing: &NamedTrace,
    spec: &[SpecEntry],
    manifest: &ModelManifest,
    thresholds: &Thresholds,
) -> Result<TraceExplanation, PipelineError> {
    thresholds.validate()?;
    let violations = check_failing_trace(spec, &failing.trace, &thresholds.eval_options())?;
    let annotations = annotate_signals(&violations, &failing.trace);
    let fail_signals: Vec<SignalAnnotation> = annotations
        .iter()
        .filter(|a| a.label == Label::Fail)
        .cloned()
        .collect();
    let error_threshold =
        (thresholds.elbow_factor * failing.trace.end()).powi(2) * fail_signals.len() as f64;
    let (status, explanation) =
        match build_explanation(&annotations, &violations, manifest, error_threshold) {
            Ok(e) => (ExplanationStatus::Explained, Some(e)),
            Err(ClusterError::NoViolations) => (ExplanationStatus::Inconclusive, None),
            Err(e) => return Err(e.into()),
        };
    let total = manifest.variables.len().max(1) as f64;
    Ok(TraceExplanation {
        trace: failing.id.clone(),
        sha256: failing.sha256.clone(),
        status,
        scope_reduction_percent: 100.0 * (1.0 - fail_signals.len() as f64 / total),
        violations,
        fail_signals,
        explanation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionSummary {
    pub variables: usize,
    pub significant: usize,
    pub removed: usize,
    pub reduction_percent: f64,
    pub report: ReductionReport,
}

impl ReductionSummary {
    pub fn new(report: ReductionReport) -> Self {
        Self {
            variables: report.kept.len() + report.removed.len() + report.unanalyzed.len(),
            significant: report.kept.len() + report.unanalyzed.len(),
            removed: report.removed.len(),
            reduction_percent: report.reduction_percent(),
            report,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub requirement: String,
    pub seed: u64,
    pub thresholds: Thresholds,
    pub spec_sha256: String,
    pub property_count: usize,
    pub traces: Vec<TraceVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduction: Option<ReductionSummary>,
    pub explanations: Vec<TraceExplanation>,
}

impl Report {
    pub fn is_inconclusive(&self) -> bool {
        self.explanations
            .iter()
            .any(|e| e.status == ExplanationStatus::Inconclusive)
    }

    /// Deterministic JSON: fixed field order, no timestamps or paths.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Requirement: {}", self.requirement);
        let passing = self
            .traces
            .iter()
            .filter(|t| t.verdict == Verdict::Pass)
            .count();
        let _ = writeln!(
            out,
            "Traces: {} passing, {} failing",
            passing,
            self.traces.len() - passing
        );
        if let Some(r) = &self.reduction {
            let _ = writeln!(
                out,
                "Variables: {} total, {} significant ({:.1}% removed as correlated)",
                r.variables, r.significant, r.reduction_percent
            );
        }
        let _ = writeln!(
            out,
            "Mined properties: {} (spec sha256 {})",
            self.property_count, self.spec_sha256
        );
        for e in &self.explanations {
            let _ = writeln!(out);
            let _ = writeln!(out, "Failing trace {} (sha256 {})", e.trace, e.sha256);
            match &e.explanation {
                None => {
                    let _ = writeln!(
                        out,
                        "  inconclusive: the requirement fails but no mined property is violated"
                    );
                }
                Some(x) => {
                    let _ = writeln!(
                        out,
                        "  {} violated properties, {} suspicious signals, scope reduction {:.1}%",
                        e.violations.len(),
                        e.fail_signals.len(),
                        e.scope_reduction_percent
                    );
                    for line in render_text(x).lines() {
                        let _ = writeln!(out, "  {line}");
                    }
                }
            }
        }
        out
    }
}

/// Runs every phase on already loaded traces and explains each failing one.
pub fn run_pipeline(
    traces: &mut [NamedTrace],
    manifest: &ModelManifest,
    requirement: &Formula,
    thresholds: &Thresholds,
    seed: u64,
) -> Result<(Report, MiningResult, String), PipelineError> {
    thresholds.validate()?;
    let verdicts = monitor(traces, requirement)?;
    let mined = mine_passing(traces, manifest, thresholds)?;
    let spec_text = crate::miner::render_spec(&mined.properties);
    let spec: Vec<SpecEntry> = mined
        .properties
        .iter()
        .map(MinedProperty::to_entry)
        .collect();
    let explanations = traces
        .iter()
        .filter(|t| t.trace.verdict() == Some(Verdict::Fail))
        .map(|t| explain_trace(t, &spec, manifest, thresholds))
        .collect::<Result<Vec<_>, _>>()?;
    let report = Report {
        requirement: requirement.to_string(),
        seed,
        thresholds: *thresholds,
        spec_sha256: sha256_hex(spec_text.as_bytes()),
        property_count: mined.properties.len(),
        traces: verdicts,
        reduction: Some(ReductionSummary::new(mined.reduction.clone())),
        explanations,
    };
    Ok((report, mined, spec_text))
}
