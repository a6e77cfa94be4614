//! Template-based invariant inference over passing traces.
//!
//! Variables are mined in groups sharing an owning block and a value
//! domain. Every template instance that holds on all observations, clears
//! the significance gate and is not implied by another surviving instance
//! becomes an assertion `alw (p)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manifest::ModelManifest;
use crate::stl::{self, CmpOp, Formula, Literal, ParseError, Term};
use crate::trace::{BlockPath, Domain, Trace, TraceError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MinerError {
    #[error("need at least two observations, got {0}")]
    TooFewObservations(usize),
    #[error("no passing traces to mine")]
    NoPassingTraces,
    #[error("grid step must be positive, got {0}")]
    InvalidGridStep(f64),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("specification line {line}: {error}")]
    SpecSyntax { line: usize, error: ParseError },
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Template {
    OneOf,
    LowerBound,
    UpperBound,
    Constant,
    NonZero,
    Equal,
    LessEq,
    /// `y = a*x + b` over variables `[x, y]` with parameters `[a, b]`.
    LinearBinary,
    SumConstant,
}

impl Template {
    pub fn name(self) -> &'static str {
        match self {
            Template::OneOf => "OneOf",
            Template::LowerBound => "LowerBound",
            Template::UpperBound => "UpperBound",
            Template::Constant => "Constant",
            Template::NonZero => "NonZero",
            Template::Equal => "Equal",
            Template::LessEq => "LessEq",
            Template::LinearBinary => "LinearBinary",
            Template::SumConstant => "SumConstant",
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One template instance that survived mining.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinedProperty {
    pub id: String,
    pub template: Template,
    pub block: BlockPath,
    pub variables: Vec<String>,
    /// Template constants: the bound, constant or `[a, b]`; for `OneOf`
    /// the member values.
    pub parameters: Vec<f64>,
    /// Enumeration labels of a `OneOf` set.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
    pub confidence: f64,
    pub assertion: String,
}

impl MinedProperty {
    pub fn formula(&self) -> Formula {
        stl::parse_formula(&self.assertion).expect("assertions are rendered by to_stl")
    }

    pub fn to_entry(&self) -> SpecEntry {
        SpecEntry {
            id: self.id.clone(),
            formula: self.formula(),
            block: Some(self.block.clone()),
            template: Some(self.template.name().to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableGroup {
    pub block: BlockPath,
    pub domain: Domain,
    pub variables: Vec<String>,
}

/// Partitions `kept` by owning block and domain. Groups appear in order of
/// their first variable in the manifest.
pub fn group_variables(manifest: &ModelManifest, kept: &[String]) -> Vec<VariableGroup> {
    let wanted: BTreeSet<&str> = kept.iter().map(String::as_str).collect();
    let mut groups: Vec<VariableGroup> = Vec::new();
    for v in manifest
        .variables
        .iter()
        .filter(|v| wanted.contains(v.name.as_str()))
    {
        match groups
            .iter_mut()
            .find(|g| g.block == v.block_path && g.domain == v.domain)
        {
            Some(g) => g.variables.push(v.name.clone()),
            None => groups.push(VariableGroup {
                block: v.block_path.clone(),
                domain: v.domain.clone(),
                variables: vec![v.name.clone()],
            }),
        }
    }
    groups
}

/// Observation tuples of a group; values are stored codes.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMatrix {
    pub block: BlockPath,
    pub domain: Domain,
    pub variables: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Observation instants of one trace for `vars`.
///
/// With no explicit step these are the native sample times of the
/// variables plus the trace end, which keeps mined bounds and linear
/// relations valid between samples.
fn observation_times(
    trace: &Trace,
    vars: &[String],
    step: Option<f64>,
) -> Result<Vec<f64>, MinerError> {
    let end = trace.end();
    if let Some(h) = step {
        let n = (end / h + 1e-9).floor() as usize;
        return Ok((0..=n).map(|k| (k as f64 * h).min(end)).collect());
    }
    let mut times: Vec<f64> = Vec::new();
    for v in vars {
        times.extend_from_slice(trace.require(v)?.times());
    }
    times.push(end);
    times.sort_by(f64::total_cmp);
    times.dedup();
    Ok(times)
}

pub fn build_observations(
    group: &VariableGroup,
    passing: &[Trace],
    grid_step: Option<f64>,
) -> Result<ObservationMatrix, MinerError> {
    if let Some(h) = grid_step {
        if !(h > 0.0 && h.is_finite()) {
            return Err(MinerError::InvalidGridStep(h));
        }
    }
    let mut rows = Vec::new();
    for trace in passing {
        let signals = group
            .variables
            .iter()
            .map(|v| trace.require(v))
            .collect::<Result<Vec<_>, _>>()?;
        for t in observation_times(trace, &group.variables, grid_step)? {
            let row = signals
                .iter()
                .map(|s| s.code_at(t.min(s.last_time())))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
    }
    Ok(ObservationMatrix {
        block: group.block.clone(),
        domain: group.domain.clone(),
        variables: group.variables.clone(),
        rows,
    })
}

/// `1 - P_chance` for a template instance seen on `n` observations.
///
/// `r` is the number of values the involved tuple could take and `k` the
/// size of a `OneOf` set.
pub fn confidence(template: Template, n: usize, r: f64, k: usize) -> f64 {
    let n = n as f64;
    let chance = match template {
        Template::OneOf => (k as f64 / r).powf(n),
        Template::Constant | Template::SumConstant => (1.0 / r).powf(n - 1.0),
        Template::LinearBinary => (1.0 / r).powf(n - 2.0),
        Template::LowerBound
        | Template::UpperBound
        | Template::NonZero
        | Template::Equal
        | Template::LessEq => (1.0 - 1.0 / r).powf(n),
    };
    (1.0 - chance).clamp(0.0, 1.0)
}

fn distinct(values: impl Iterator<Item = Vec<f64>>) -> usize {
    // +0.0 folds negative zero into positive zero
    values
        .map(|v| v.iter().map(|x| (x + 0.0).to_bits()).collect::<Vec<_>>())
        .collect::<BTreeSet<_>>()
        .len()
}

struct Miner<'a> {
    obs: &'a ObservationMatrix,
    /// Term values per variable column.
    columns: Vec<Vec<f64>>,
}

impl Miner<'_> {
    fn n(&self) -> usize {
        self.obs.rows.len()
    }

    /// Value universe size for the given columns.
    fn universe(&self, cols: &[usize]) -> f64 {
        match &self.obs.domain {
            Domain::Enum(values) => (values.len() as f64).powi(cols.len() as i32),
            Domain::Boolean => 2f64.powi(cols.len() as i32),
            Domain::Real => {
                let tuples =
                    (0..self.n()).map(|i| cols.iter().map(|&c| self.columns[c][i]).collect());
                distinct(tuples).max(2) as f64
            }
        }
    }

    /// Whether `term op bound` holds on every row, using the monitor's
    /// arithmetic.
    fn holds(&self, term: &Term, op: CmpOp, bound: f64) -> bool {
        (0..self.n()).all(|i| {
            let lookup = |name: &str| {
                self.obs
                    .variables
                    .iter()
                    .position(|v| v == name)
                    .map(|c| self.columns[c][i])
            };
            term.eval_point(&lookup).is_some_and(|v| op.holds(v, bound))
        })
    }

    fn candidate(
        &self,
        template: Template,
        cols: &[usize],
        parameters: Vec<f64>,
        labels: Vec<String>,
    ) -> MinedProperty {
        let r = self.universe(cols);
        let k = parameters.len();
        let variables: Vec<String> = cols
            .iter()
            .map(|&c| self.obs.variables[c].clone())
            .collect();
        let mut prop = MinedProperty {
            id: String::new(),
            template,
            block: self.obs.block.clone(),
            variables,
            parameters,
            labels,
            confidence: confidence(template, self.n(), r, k),
            assertion: String::new(),
        };
        prop.assertion = to_stl(&prop).to_string();
        prop
    }

    fn unary(&self, c: usize, out: &mut Vec<MinedProperty>) {
        let col = &self.columns[c];
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let domain = &self.obs.domain;
        if domain.is_discrete() {
            let mut codes: Vec<usize> = self.obs.rows.iter().map(|r| r[c] as usize).collect();
            codes.sort_unstable();
            codes.dedup();
            let labels = match domain {
                Domain::Enum(values) => codes.iter().map(|&i| values[i].clone()).collect(),
                _ => Vec::new(),
            };
            let values = codes.iter().map(|&i| domain.term_value(i as f64)).collect();
            out.push(self.candidate(Template::OneOf, &[c], values, labels));
        }
        if matches!(domain, Domain::Enum(_)) {
            return;
        }
        if lo == hi {
            out.push(self.candidate(Template::Constant, &[c], vec![lo], Vec::new()));
        }
        if *domain == Domain::Boolean {
            return;
        }
        out.push(self.candidate(Template::LowerBound, &[c], vec![lo], Vec::new()));
        out.push(self.candidate(Template::UpperBound, &[c], vec![hi], Vec::new()));
        // a sign change between samples would cross zero, so only one-signed data qualifies
        if lo > 0.0 || hi < 0.0 {
            out.push(self.candidate(Template::NonZero, &[c], vec![lo.signum()], Vec::new()));
        }
    }

    fn binary(&self, i: usize, j: usize, out: &mut Vec<MinedProperty>) {
        let (x, y) = (&self.obs.variables[i], &self.obs.variables[j]);
        let diff = Term::sub(Term::var(x), Term::var(y));
        let equal = self.holds(&diff, CmpOp::Eq, 0.0);
        if equal {
            out.push(self.candidate(Template::Equal, &[i, j], Vec::new(), Vec::new()));
        }
        if self.obs.domain.is_discrete() {
            return;
        }
        if self.holds(&diff, CmpOp::Le, 0.0) {
            out.push(self.candidate(Template::LessEq, &[i, j], Vec::new(), Vec::new()));
        }
        if self.holds(&diff, CmpOp::Ge, 0.0) {
            out.push(self.candidate(Template::LessEq, &[j, i], Vec::new(), Vec::new()));
        }
        let (xs, ys) = (&self.columns[i], &self.columns[j]);
        let c = xs[0] + ys[0];
        if self.holds(&Term::add(Term::var(x), Term::var(y)), CmpOp::Eq, c) {
            out.push(self.candidate(Template::SumConstant, &[i, j], vec![c], Vec::new()));
        }
        // y = a*x + b through the first row and the row farthest from it in x
        let far =
            (0..xs.len()).max_by(|&p, &q| (xs[p] - xs[0]).abs().total_cmp(&(xs[q] - xs[0]).abs()));
        if let Some(p) = far.filter(|&p| xs[p] != xs[0]) {
            let a = (ys[p] - ys[0]) / (xs[p] - xs[0]);
            let b = ys[0] - a * xs[0];
            if a != 0.0 && a.is_finite() && b.is_finite() {
                let term = Term::sub(Term::var(y), Term::scale(a, Term::var(x)));
                if self.holds(&term, CmpOp::Eq, b) {
                    out.push(self.candidate(
                        Template::LinearBinary,
                        &[i, j],
                        vec![a, b],
                        Vec::new(),
                    ));
                }
            }
        }
    }
}

/// All significant, non-implied template instances of one group.
pub fn infer_properties(
    obs: &ObservationMatrix,
    significance: f64,
) -> Result<Vec<MinedProperty>, MinerError> {
    if obs.rows.len() < 2 {
        return Err(MinerError::TooFewObservations(obs.rows.len()));
    }
    let columns = (0..obs.variables.len())
        .map(|c| {
            obs.rows
                .iter()
                .map(|r| obs.domain.term_value(r[c]))
                .collect()
        })
        .collect();
    let miner = Miner { obs, columns };
    let mut candidates = Vec::new();
    for i in 0..obs.variables.len() {
        miner.unary(i, &mut candidates);
    }
    for i in 0..obs.variables.len() {
        for j in i + 1..obs.variables.len() {
            miner.binary(i, j, &mut candidates);
        }
    }
    candidates.retain(|p| p.confidence > significance);
    Ok(suppress_implied(candidates))
}

fn constant_of<'a>(props: &'a [MinedProperty], var: &str) -> Option<&'a MinedProperty> {
    props
        .iter()
        .find(|p| p.template == Template::Constant && p.variables[0] == var)
}

/// Whether `a` logically implies `b` under the fixed implication table.
pub fn implies(a: &MinedProperty, b: &MinedProperty, all: &[MinedProperty]) -> bool {
    if a.block != b.block {
        return false;
    }
    use Template::*;
    let same_pair = |p: &MinedProperty, q: &MinedProperty| {
        p.variables.len() == 2
            && q.variables.len() == 2
            && (p.variables == q.variables
                || (p.variables[0] == q.variables[1] && p.variables[1] == q.variables[0]))
    };
    match (a.template, b.template) {
        (Constant, OneOf | LowerBound | UpperBound | NonZero) => a.variables == b.variables,
        (Equal, LessEq) => same_pair(a, b),
        (Equal, LinearBinary) => a.variables == b.variables && b.parameters == [1.0, 0.0],
        (SumConstant, LinearBinary) => {
            a.variables == b.variables && b.parameters == [-1.0, a.parameters[0]]
        }
        (Constant, Equal | LessEq | LinearBinary | SumConstant) if b.variables.len() == 2 => {
            // a constant pair makes every binary relation between them redundant
            b.variables.contains(&a.variables[0])
                && b.variables.iter().all(|v| constant_of(all, v).is_some())
        }
        _ => false,
    }
}

/// Drops every property implied by another one; order is preserved.
pub fn suppress_implied(props: Vec<MinedProperty>) -> Vec<MinedProperty> {
    let keep: Vec<bool> = props
        .iter()
        .enumerate()
        .map(|(i, b)| {
            !props
                .iter()
                .enumerate()
                .any(|(j, a)| i != j && implies(a, b, &props))
        })
        .collect();
    props
        .into_iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(p))
        .collect()
}

/// The assertion `alw (p)` for a property.
pub fn to_stl(prop: &MinedProperty) -> Formula {
    let var = |i: usize| Term::var(&prop.variables[i]);
    let p = &prop.parameters;
    let body = match prop.template {
        Template::OneOf => {
            let set = if prop.labels.is_empty() {
                p.iter().map(|&v| Literal::Num(v)).collect()
            } else {
                prop.labels.iter().map(|l| Literal::from_label(l)).collect()
            };
            Formula::Member { term: var(0), set }
        }
        Template::LowerBound => Formula::compare(var(0), CmpOp::Ge, p[0]),
        Template::UpperBound => Formula::compare(var(0), CmpOp::Le, p[0]),
        Template::Constant => Formula::compare(var(0), CmpOp::Eq, p[0]),
        Template::NonZero => {
            let op = if p[0] > 0.0 {
                CmpOp::Gt
            } else if p[0] < 0.0 {
                CmpOp::Lt
            } else {
                CmpOp::Ne
            };
            Formula::compare(var(0), op, 0.0)
        }
        Template::Equal => Formula::compare(Term::sub(var(0), var(1)), CmpOp::Eq, 0.0),
        Template::LessEq => Formula::compare(Term::sub(var(0), var(1)), CmpOp::Le, 0.0),
        Template::LinearBinary => Formula::compare(
            Term::sub(var(1), Term::scale(p[0], var(0))),
            CmpOp::Eq,
            p[1],
        ),
        Template::SumConstant => Formula::compare(Term::add(var(0), var(1)), CmpOp::Eq, p[0]),
    };
    Formula::invariant(body)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiningConfig {
    pub significance: f64,
    pub grid_step: Option<f64>,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            significance: 0.99,
            grid_step: None,
        }
    }
}

/// Mines every group of `kept` and assigns identifiers `psi1..psik` in the
/// order block path, template name, variable names.
pub fn mine(
    passing: &[Trace],
    manifest: &ModelManifest,
    kept: &[String],
    config: &MiningConfig,
) -> Result<Vec<MinedProperty>, MinerError> {
    if passing.is_empty() {
        return Err(MinerError::NoPassingTraces);
    }
    if let Some(v) = kept.iter().find(|v| manifest.variable(v).is_none()) {
        return Err(MinerError::UnknownVariable(v.clone()));
    }
    let mut props = Vec::new();
    for group in group_variables(manifest, kept) {
        let obs = build_observations(&group, passing, config.grid_step)?;
        let found = infer_properties(&obs, config.significance)?;
        log::debug!(
            "block {} ({}): {} properties",
            group.block,
            group.domain.tag(),
            found.len()
        );
        props.extend(found);
    }
    props.sort_by(|a, b| {
        (a.block.to_string(), a.template.name(), &a.variables).cmp(&(
            b.block.to_string(),
            b.template.name(),
            &b.variables,
        ))
    });
    for (i, p) in props.iter_mut().enumerate() {
        p.id = format!("psi{}", i + 1);
    }
    Ok(props)
}

/// One assertion of a specification file.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecEntry {
    pub id: String,
    pub formula: Formula,
    pub block: Option<BlockPath>,
    pub template: Option<String>,
}

/// Renders properties as a specification file: one assertion per line
/// followed by a comment with its identifier and provenance.
pub fn render_spec(props: &[MinedProperty]) -> String {
    let mut out = String::new();
    for p in props {
        out.push_str(&format!(
            "{}  # {} template={} block={} confidence={}\n",
            p.assertion, p.id, p.template, p.block, p.confidence
        ));
    }
    out
}

/// Parses a specification file. Lines without an identifier comment get
/// `psi<n>` by position.
pub fn parse_spec(text: &str) -> Result<Vec<SpecEntry>, MinerError> {
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let (body, comment) = match line.split_once('#') {
            Some((b, c)) => (b.trim(), c.trim()),
            None => (line.trim(), ""),
        };
        if body.is_empty() {
            continue;
        }
        let formula = stl::parse_formula(body).map_err(|error| MinerError::SpecSyntax {
            line: lineno + 1,
            error,
        })?;
        let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
        let mut id = None;
        for tok in comment.split_whitespace() {
            match tok.split_once('=') {
                Some((k, v)) => {
                    fields.insert(k, v);
                }
                None if id.is_none() => id = Some(tok.to_string()),
                None => {}
            }
        }
        entries.push(SpecEntry {
            id: id.unwrap_or_else(|| format!("psi{}", entries.len() + 1)),
            formula,
            block: fields.get("block").map(|b| BlockPath::from(*b)),
            template: fields.get("template").map(|t| t.to_string()),
        });
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prop(template: Template, vars: &[&str], parameters: Vec<f64>) -> MinedProperty {
        let mut p = MinedProperty {
            id: String::new(),
            template,
            block: BlockPath::from("root"),
            variables: vars.iter().map(|v| v.to_string()).collect(),
            parameters,
            labels: Vec::new(),
            confidence: 1.0,
            assertion: String::new(),
        };
        p.assertion = to_stl(&p).to_string();
        p
    }

    #[test]
    fn constant_implies_bounds() {
        let c = prop(Template::Constant, &["x"], vec![5.0]);
        let lb = prop(Template::LowerBound, &["x"], vec![5.0]);
        assert_eq!(suppress_implied(vec![c.clone(), lb]), vec![c]);
    }

    #[test]
    fn independent_properties_survive() {
        let a = prop(Template::NonZero, &["x"], vec![1.0]);
        let b = prop(Template::LowerBound, &["y"], vec![0.0]);
        let out = suppress_implied(vec![a.clone(), b.clone()]);
        assert_eq!(out, vec![a, b]);
    }

    #[test]
    fn equality_implies_order() {
        let eq = prop(Template::Equal, &["a", "b"], vec![]);
        let le = prop(Template::LessEq, &["a", "b"], vec![]);
        let ge = prop(Template::LessEq, &["b", "a"], vec![]);
        let lin = prop(Template::LinearBinary, &["a", "b"], vec![1.0, 0.0]);
        assert_eq!(suppress_implied(vec![le, eq.clone(), ge, lin]), vec![eq]);
    }

    #[test]
    fn sum_implies_negative_slope_line() {
        let sum = prop(Template::SumConstant, &["x", "y"], vec![4.0]);
        let lin = prop(Template::LinearBinary, &["x", "y"], vec![-1.0, 4.0]);
        let other = prop(Template::LinearBinary, &["x", "y"], vec![-1.0, 3.0]);
        assert_eq!(
            suppress_implied(vec![sum.clone(), lin, other.clone()]),
            vec![sum, other]
        );
    }

    #[test]
    fn constant_pair_hides_binary_relations() {
        let cx = prop(Template::Constant, &["x"], vec![1.0]);
        let cy = prop(Template::Constant, &["y"], vec![2.0]);
        let le = prop(Template::LessEq, &["x", "y"], vec![]);
        let z = prop(Template::LessEq, &["x", "z"], vec![]);
        assert_eq!(
            suppress_implied(vec![cx.clone(), cy.clone(), le, z.clone()]),
            vec![cx, cy, z]
        );
    }

    #[test]
    fn bounds_do_not_hide_sign() {
        let lb = prop(Template::LowerBound, &["x"], vec![1.0]);
        let nz = prop(Template::NonZero, &["x"], vec![1.0]);
        assert_eq!(suppress_implied(vec![lb.clone(), nz.clone()]), vec![lb, nz]);
    }

    #[test]
    fn suppression_is_idempotent() {
        let props = vec![
            prop(Template::Constant, &["x"], vec![1.0]),
            prop(Template::OneOf, &["x"], vec![1.0]),
            prop(Template::Equal, &["a", "b"], vec![]),
            prop(Template::LessEq, &["b", "a"], vec![]),
        ];
        let once = suppress_implied(props);
        assert_eq!(suppress_implied(once.clone()), once);
    }

    #[test]
    fn rendering() {
        assert_eq!(
            prop(Template::Equal, &["a", "b"], vec![]).assertion,
            "alw (a == b)"
        );
        assert_eq!(
            prop(Template::LinearBinary, &["x", "y"], vec![2.0, 1.0]).assertion,
            "alw (y - 2*x == 1)"
        );
        assert_eq!(
            prop(Template::SumConstant, &["x", "y"], vec![4.0]).assertion,
            "alw (x + y == 4)"
        );
        assert_eq!(
            prop(Template::NonZero, &["x"], vec![1.0]).assertion,
            "alw (x > 0)"
        );
        assert_eq!(
            prop(Template::NonZero, &["x"], vec![-1.0]).assertion,
            "alw (x < 0)"
        );
        let mut one_of = prop(Template::OneOf, &["mode"], vec![2.0, 3.0]);
        one_of.labels = vec!["2".into(), "3".into()];
        assert_eq!(to_stl(&one_of).to_string(), "alw (mode in {2,3})");
        for p in [
            prop(Template::LinearBinary, &["x", "y"], vec![-0.5, -1.25]),
            prop(Template::LowerBound, &["x"], vec![-0.05]),
        ] {
            assert_eq!(stl::parse_formula(&p.assertion).unwrap(), to_stl(&p));
        }
    }

    #[test]
    fn confidence_formulas() {
        let c = confidence(Template::NonZero, 1000, 50.0, 0);
        assert!((c - (1.0 - 0.98f64.powi(1000))).abs() < 1e-15);
        assert!(c > 0.99);
        for t in [
            Template::OneOf,
            Template::LowerBound,
            Template::Constant,
            Template::NonZero,
            Template::Equal,
            Template::LinearBinary,
            Template::SumConstant,
        ] {
            assert!(confidence(t, 1, 2.0, 1) <= 0.99, "{t}");
        }
        assert!(confidence(Template::Constant, 500, 2.0, 0) > 0.99);
    }

    #[test]
    fn spec_file_round_trip() {
        let mut a = prop(Template::LowerBound, &["x"], vec![-0.5]);
        a.id = "psi1".into();
        a.block = BlockPath::from("root/a");
        let text = render_spec(&[a.clone()]);
        let parsed = parse_spec(&format!("# header\n\n{text}alw (y > 0)\n")).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0], a.to_entry());
        assert_eq!(parsed[1].id, "psi2");
        assert!(matches!(
            parse_spec("alw (x >"),
            Err(MinerError::SpecSyntax { line: 1, .. })
        ));
    }
}
