//! Signals, traces and CSV ingestion.
//!
//! A [`Trace`] is a bundle of named [`Signal`]s over a shared time domain
//! `[0, end]`. Real-valued signals are piecewise-linear between their
//! samples; Boolean and enumerated signals hold the value of the latest
//! sample at or before the query time.
//!
//! Internally every sample value is stored as an `f64` code: the real value
//! itself, `0.0`/`1.0` for Booleans, or the index of the label in the
//! declared value-set for enumerations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manifest::ModelManifest;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("CSV input has no `time` column")]
    MissingTimeColumn,
    #[error("time column not strictly increasing from 0 (row {row}, t = {time})")]
    NonMonotoneTime { row: usize, time: f64 },
    #[error("value `{value}` does not conform to the domain of `{variable}`")]
    DomainMismatch { variable: String, value: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("time {0} is outside the signal domain")]
    OutOfDomain(f64),
    #[error("invalid time domain end {0}; must be finite and positive")]
    InvalidTimeDomain(f64),
    #[error("signal `{0}` has no sample at t = 0")]
    MissingInitialSample(String),
    #[error("malformed CSV: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, TraceError>;

/// The time domain `[0, end]` of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeDomain {
    end: f64,
}

impl TimeDomain {
    pub fn new(end: f64) -> Result<Self> {
        if end.is_finite() && end > 0.0 {
            Ok(Self { end })
        } else {
            Err(TraceError::InvalidTimeDomain(end))
        }
    }

    pub fn end(&self) -> f64 {
        self.end
    }
}

/// Value domain of an instrumented variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Domain {
    Real,
    Boolean,
    Enum(Vec<String>),
}

impl Domain {
    pub fn is_discrete(&self) -> bool {
        !matches!(self, Domain::Real)
    }

    /// Short tag used in reports and group keys.
    pub fn tag(&self) -> String {
        match self {
            Domain::Real => "real".into(),
            Domain::Boolean => "boolean".into(),
            Domain::Enum(values) => format!("enum{{{}}}", values.join(",")),
        }
    }

    /// Index of `label` in an enumeration value-set.
    pub fn label_index(&self, label: &str) -> Option<usize> {
        match self {
            Domain::Enum(values) => values.iter().position(|v| v == label),
            _ => None,
        }
    }

    /// Value of a stored code inside arithmetic terms. Enumerations whose
    /// labels are all numeric evaluate to the label's number, other
    /// enumerations to the label index.
    pub fn term_value(&self, code: f64) -> f64 {
        match self {
            Domain::Enum(values) => values
                .get(code as usize)
                .filter(|_| self.has_numeric_labels())
                .and_then(|l| l.parse::<f64>().ok())
                .unwrap_or(code),
            _ => code,
        }
    }

    /// True for enumerations whose labels all parse as numbers.
    pub fn has_numeric_labels(&self) -> bool {
        match self {
            Domain::Enum(values) => values.iter().all(|l| l.parse::<f64>().is_ok()),
            _ => false,
        }
    }

    /// Parses a CSV cell into the numeric code used for storage.
    fn parse_code(&self, variable: &str, cell: &str) -> Result<f64> {
        let mismatch = || TraceError::DomainMismatch {
            variable: variable.to_string(),
            value: cell.to_string(),
        };
        match self {
            Domain::Real => cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(mismatch),
            Domain::Boolean => match cell.parse::<f64>() {
                Ok(v) if v == 0.0 || v == 1.0 => Ok(v),
                _ => Err(mismatch()),
            },
            Domain::Enum(_) => self
                .label_index(cell)
                .map(|i| i as f64)
                .ok_or_else(mismatch),
        }
    }

    fn conforms(&self, code: f64) -> bool {
        match self {
            Domain::Real => code.is_finite(),
            Domain::Boolean => code == 0.0 || code == 1.0,
            Domain::Enum(values) => {
                code >= 0.0 && code.fract() == 0.0 && (code as usize) < values.len()
            }
        }
    }

    fn render_code(&self, code: f64) -> String {
        match self {
            Domain::Real => format!("{code}"),
            Domain::Boolean => if code != 0.0 { "1" } else { "0" }.to_string(),
            Domain::Enum(values) => values[code as usize].clone(),
        }
    }

    fn decode(&self, code: f64) -> Value {
        match self {
            Domain::Real => Value::Real(code),
            Domain::Boolean => Value::Bool(code != 0.0),
            Domain::Enum(values) => Value::Label(values[code as usize].clone()),
        }
    }
}

/// Role of a variable in the instrumented model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarKind {
    PlainSignal,
    LookupCellIndex,
    SmTransition,
    SmLocation,
}

/// Path of block names from the model root, e.g. `plant/sensors/left_inner`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlockPath(Vec<String>);

impl BlockPath {
    pub fn new(segments: Vec<String>) -> Self {
        Self(segments)
    }

    pub fn segments(&self) -> &[String] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// This path followed by all of its proper prefixes, shortest last.
    pub fn with_ancestors(&self) -> impl Iterator<Item = BlockPath> + '_ {
        (1..=self.0.len())
            .rev()
            .map(|n| BlockPath(self.0[..n].to_vec()))
    }

    pub fn starts_with(&self, other: &BlockPath) -> bool {
        self.0.starts_with(&other.0)
    }
}

impl fmt::Display for BlockPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("/"))
    }
}

impl From<&str> for BlockPath {
    fn from(s: &str) -> Self {
        BlockPath(
            s.split('/')
                .filter(|p| !p.is_empty())
                .map(String::from)
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VariableMeta {
    pub name: String,
    pub domain: Domain,
    pub kind: VarKind,
    pub block_path: BlockPath,
}

impl VariableMeta {
    pub fn new(name: impl Into<String>, domain: Domain, kind: VarKind, block: &str) -> Self {
        Self {
            name: name.into(),
            domain,
            kind,
            block_path: BlockPath::from(block),
        }
    }
}

/// A decoded sample value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Real(f64),
    Bool(bool),
    Label(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    meta: Arc<VariableMeta>,
    times: Vec<f64>,
    codes: Vec<f64>,
}

impl Signal {
    /// Builds a signal from `(time, code)` pairs; see the module docs for
    /// the meaning of codes.
    pub fn from_codes(meta: Arc<VariableMeta>, times: Vec<f64>, codes: Vec<f64>) -> Result<Self> {
        assert_eq!(
            times.len(),
            codes.len(),
            "times and codes must have equal length"
        );
        if times.first() != Some(&0.0) {
            return Err(TraceError::MissingInitialSample(meta.name.clone()));
        }
        for (row, w) in times.windows(2).enumerate() {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(TraceError::NonMonotoneTime {
                    row: row + 1,
                    time: w[1],
                });
            }
        }
        if let Some(&bad) = codes.iter().find(|c| !meta.domain.conforms(**c)) {
            return Err(TraceError::DomainMismatch {
                variable: meta.name.clone(),
                value: bad.to_string(),
            });
        }
        Ok(Self { meta, times, codes })
    }

    pub fn from_reals(meta: Arc<VariableMeta>, samples: &[(f64, f64)]) -> Result<Self> {
        let (times, codes) = samples.iter().copied().unzip();
        Self::from_codes(meta, times, codes)
    }

    pub fn name(&self) -> &str {
        &self.meta.name
    }

    pub fn meta(&self) -> &VariableMeta {
        &self.meta
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn codes(&self) -> &[f64] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("signals are never empty")
    }

    /// Numeric code at `t`: linear interpolation for reals, left-closed hold
    /// for discrete domains. Stored samples are returned exactly.
    pub fn code_at(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.last_time()).contains(&t) {
            return Err(TraceError::OutOfDomain(t));
        }
        // first index with time > t
        let idx = self.times.partition_point(|&s| s <= t);
        let i = idx - 1;
        if self.times[i] == t || self.meta.domain.is_discrete() {
            return Ok(self.codes[i]);
        }
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (v0, v1) = (self.codes[i], self.codes[i + 1]);
        Ok(v0 + (v1 - v0) * ((t - t0) / (t1 - t0)))
    }

    pub fn sample_at(&self, t: f64) -> Result<Value> {
        self.code_at(t).map(|c| match self.meta.domain {
            Domain::Real => Value::Real(c),
            _ => self.meta.domain.decode(c),
        })
    }

    /// Sample codes on `grid`; Booleans map to {0,1}, enums to label indices.
    pub fn resample(&self, grid: &[f64]) -> Result<Vec<f64>> {
        grid.iter().map(|&t| self.code_at(t)).collect()
    }

    /// Median spacing between consecutive samples, if there are at least two.
    pub fn median_interval(&self) -> Option<f64> {
        let mut gaps: Vec<f64> = self.times.windows(2).map(|w| w[1] - w[0]).collect();
        if gaps.is_empty() {
            return None;
        }
        gaps.sort_by(f64::total_cmp);
        Some(gaps[gaps.len() / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    domain: TimeDomain,
    signals: Vec<Signal>,
    index: BTreeMap<String, usize>,
    verdict: Option<Verdict>,
}

impl Trace {
    /// Assembles a trace; the domain end is the latest sample time.
    pub fn new(signals: Vec<Signal>) -> Result<Self> {
        let end = signals.iter().map(Signal::last_time).fold(0.0, f64::max);
        Self::with_domain(TimeDomain::new(end)?, signals)
    }

    pub fn with_domain(domain: TimeDomain, signals: Vec<Signal>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, s) in signals.iter().enumerate() {
            if s.last_time() > domain.end() {
                return Err(TraceError::OutOfDomain(s.last_time()));
            }
            if index.insert(s.name().to_string(), i).is_some() {
                return Err(TraceError::Csv(format!("duplicate signal `{}`", s.name())));
            }
        }
        Ok(Self {
            domain,
            signals,
            index,
            verdict: None,
        })
    }

    pub fn domain(&self) -> TimeDomain {
        self.domain
    }

    pub fn end(&self) -> f64 {
        self.domain.end()
    }

    pub fn verdict(&self) -> Option<Verdict> {
        self.verdict
    }

    pub fn with_verdict(mut self, verdict: Verdict) -> Self {
        self.verdict = Some(verdict);
        self
    }

    pub fn set_verdict(&mut self, verdict: Verdict) {
        self.verdict = Some(verdict);
    }

    pub fn signal(&self, name: &str) -> Option<&Signal> {
        self.index.get(name).map(|&i| &self.signals[i])
    }

    pub fn require(&self, name: &str) -> Result<&Signal> {
        self.signal(name)
            .ok_or_else(|| TraceError::UnknownVariable(name.to_string()))
    }

    /// Signals in insertion order.
    pub fn signals(&self) -> &[Signal] {
        &self.signals
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.signals.iter().map(Signal::name)
    }

    /// Restriction of the trace to `vars`, preserving signal order.
    pub fn project<S: AsRef<str>>(&self, vars: &[S]) -> Result<Trace> {
        let wanted: BTreeSet<&str> = vars.iter().map(AsRef::as_ref).collect();
        if let Some(missing) = wanted.iter().find(|v| !self.index.contains_key(**v)) {
            return Err(TraceError::UnknownVariable(missing.to_string()));
        }
        let signals = self
            .signals
            .iter()
            .filter(|s| wanted.contains(s.name()))
            .cloned()
            .collect();
        let mut out = Trace::with_domain(self.domain, signals)?;
        out.verdict = self.verdict;
        Ok(out)
    }

    /// Smallest median sampling interval across all signals.
    pub fn min_median_interval(&self) -> Option<f64> {
        self.signals
            .iter()
            .filter_map(Signal::median_interval)
            .min_by(f64::total_cmp)
    }

    /// Renders the trace in the CSV exchange format. Variables without a
    /// sample at a given row time leave the cell empty.
    pub fn render_csv(&self) -> String {
        let times: BTreeSet<OrderedTime> = self
            .signals
            .iter()
            .flat_map(|s| s.times.iter().map(|&t| OrderedTime(t)))
            .collect();
        let mut cursors = vec![0usize; self.signals.len()];
        let mut out = String::from("time");
        for s in &self.signals {
            out.push(',');
            out.push_str(s.name());
        }
        out.push('\n');
        for OrderedTime(t) in times {
            out.push_str(&format!("{t}"));
            for (s, cur) in self.signals.iter().zip(cursors.iter_mut()) {
                out.push(',');
                if *cur < s.times.len() && s.times[*cur] == t {
                    out.push_str(&s.meta.domain.render_code(s.codes[*cur]));
                    *cur += 1;
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrderedTime(f64);

impl Eq for OrderedTime {}

impl PartialOrd for OrderedTime {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrderedTime {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Parses a CSV trace whose columns are described by `manifest`.
pub fn load_trace(csv_content: &str, manifest: &ModelManifest) -> Result<Trace> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(csv_content.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| TraceError::Csv(e.to_string()))?
        .clone();
    let time_col = headers
        .iter()
        .position(|h| h == "time")
        .ok_or(TraceError::MissingTimeColumn)?;

    let mut columns = Vec::new();
    for (col, name) in headers.iter().enumerate() {
        if col == time_col {
            continue;
        }
        let meta = manifest
            .variable(name)
            .ok_or_else(|| TraceError::UnknownVariable(name.to_string()))?;
        columns.push((col, Arc::new(meta.clone()), Vec::new(), Vec::new()));
    }

    let mut prev: Option<f64> = None;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| TraceError::Csv(e.to_string()))?;
        let cell = record.get(time_col).unwrap_or("");
        let t: f64 = cell
            .parse()
            .map_err(|_| TraceError::Csv(format!("bad time `{cell}` on row {}", row + 1)))?;
        let ok = match prev {
            None => t == 0.0,
            Some(p) => t > p && t.is_finite(),
        };
        if !ok {
            return Err(TraceError::NonMonotoneTime {
                row: row + 1,
                time: t,
            });
        }
        prev = Some(t);
        for (col, meta, times, codes) in columns.iter_mut() {
            let cell = record.get(*col).unwrap_or("");
            if cell.is_empty() {
                continue;
            }
            codes.push(meta.domain.parse_code(&meta.name, cell)?);
            times.push(t);
        }
    }

    let end = prev.ok_or_else(|| TraceError::Csv("no data rows".into()))?;
    let signals = columns
        .into_iter()
        .map(|(_, meta, times, codes)| Signal::from_codes(meta, times, codes))
        .collect::<Result<Vec<_>>>()?;
    Trace::with_domain(TimeDomain::new(end)?, signals)
}
