//! Checking a failing trace against a mined specification.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::miner::SpecEntry;
use crate::stl::{violation_intervals, EvalError, EvalOptions, Span};
use crate::trace::{Trace, Verdict};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CheckError {
    #[error("property {property} mentions unknown variable `{variable}`")]
    UnknownVariable { property: String, variable: String },
    #[error("property {property}: {error}")]
    Eval { property: String, error: EvalError },
}

/// One violated property on one trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationInstance {
    pub property: String,
    pub signals: Vec<String>,
    pub intervals: Vec<Span>,
    /// Infimum of the first violation interval.
    pub first_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalAnnotation {
    pub signal: String,
    pub label: Label,
    /// Earliest violation time over the contributing properties; Fail only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_time: Option<f64>,
    pub properties: Vec<String>,
}

/// Every property of `spec` violated somewhere on `trace`, in spec order.
/// Satisfied properties are omitted.
pub fn check_failing_trace(
    spec: &[SpecEntry],
    trace: &Trace,
    options: &EvalOptions,
) -> Result<Vec<ViolationInstance>, CheckError> {
    if trace.verdict() != Some(Verdict::Fail) {
        log::warn!("checking a trace that is not labelled failing");
    }
    for entry in spec {
        if let Some(v) = entry
            .formula
            .variables()
            .into_iter()
            .find(|v| trace.signal(v).is_none())
        {
            return Err(CheckError::UnknownVariable {
                property: entry.id.clone(),
                variable: v,
            });
        }
    }
    let mut out = Vec::new();
    for entry in spec {
        let intervals = violation_intervals(&entry.formula, trace, options).map_err(|error| {
            CheckError::Eval {
                property: entry.id.clone(),
                error,
            }
        })?;
        if let Some(first) = intervals.first() {
            out.push(ViolationInstance {
                property: entry.id.clone(),
                signals: entry.formula.variables().into_iter().collect(),
                first_time: first.lo,
                intervals,
            });
        }
    }
    Ok(out)
}

/// Labels every signal of `trace`: Fail with the earliest violation time
/// over all instances that mention it, Pass otherwise.
pub fn annotate_signals(violations: &[ViolationInstance], trace: &Trace) -> Vec<SignalAnnotation> {
    let mut hits: BTreeMap<&str, (f64, Vec<String>)> = BTreeMap::new();
    for v in violations {
        for s in &v.signals {
            let entry = hits
                .entry(s.as_str())
                .or_insert((f64::INFINITY, Vec::new()));
            entry.0 = entry.0.min(v.first_time);
            entry.1.push(v.property.clone());
        }
    }
    trace
        .names()
        .map(|name| match hits.remove(name) {
            Some((tau, properties)) => SignalAnnotation {
                signal: name.to_string(),
                label: Label::Fail,
                first_time: Some(tau),
                properties,
            },
            None => SignalAnnotation {
                signal: name.to_string(),
                label: Label::Pass,
                first_time: None,
                properties: Vec::new(),
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::parse_formula;
    use crate::trace::{Domain, Signal, VarKind, VariableMeta};
    use std::sync::Arc;

    fn trace(samples: &[(&str, &[(f64, f64)])]) -> Trace {
        let signals = samples
            .iter()
            .map(|(n, s)| {
                let meta = VariableMeta::new(*n, Domain::Real, VarKind::PlainSignal, "root");
                Signal::from_reals(Arc::new(meta), s).unwrap()
            })
            .collect();
        Trace::new(signals).unwrap().with_verdict(Verdict::Fail)
    }

    fn entry(id: &str, text: &str) -> SpecEntry {
        SpecEntry {
            id: id.into(),
            formula: parse_formula(text).unwrap(),
            block: None,
            template: None,
        }
    }

    #[test]
    fn satisfied_property_is_omitted() {
        let tr = trace(&[("x", &[(0.0, 1.0), (5.0, 1.0)])]);
        let out = check_failing_trace(
            &[entry("psi1", "alw (x > 0)")],
            &tr,
            &EvalOptions::default(),
        );
        assert_eq!(out.unwrap(), vec![]);
    }

    #[test]
    fn dip_is_reported_with_its_start() {
        let tr = trace(&[(
            "x",
            &[(0.0, 1.0), (2.0, 0.0), (3.0, 0.0), (4.0, 1.0), (5.0, 1.0)],
        )]);
        let out = check_failing_trace(
            &[entry("psi1", "alw (x > 0)")],
            &tr,
            &EvalOptions::default(),
        )
        .unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].first_time, 2.0);
        assert_eq!(out[0].intervals, vec![Span::closed(2.0, 3.0)]);
        assert_eq!(out[0].signals, vec!["x"]);
    }

    #[test]
    fn unknown_variable_is_rejected() {
        let tr = trace(&[("x", &[(0.0, 1.0), (5.0, 1.0)])]);
        let err = check_failing_trace(
            &[entry("psi4", "alw (y > 0)")],
            &tr,
            &EvalOptions::default(),
        );
        assert_eq!(
            err,
            Err(CheckError::UnknownVariable {
                property: "psi4".into(),
                variable: "y".into()
            })
        );
    }

    #[test]
    fn earliest_instance_wins() {
        let tr = trace(&[
            ("x", &[(0.0, 1.0), (5.0, 1.0)]),
            ("y", &[(0.0, 1.0), (5.0, 1.0)]),
        ]);
        let v = |p: &str, tau: f64| ViolationInstance {
            property: p.into(),
            signals: vec!["x".into()],
            intervals: vec![Span::closed(tau, tau + 0.1)],
            first_time: tau,
        };
        let ann = annotate_signals(&[v("psi2", 3.99), v("psi1", 2.03)], &tr);
        assert_eq!(ann[0].label, Label::Fail);
        assert_eq!(ann[0].first_time, Some(2.03));
        assert_eq!(ann[0].properties, vec!["psi2", "psi1"]);
        assert_eq!(ann[1].label, Label::Pass);
        assert_eq!(ann[1].first_time, None);
    }
}
