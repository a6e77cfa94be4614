//! Boolean semantics over traces, computed as interval sets.
//!
//! Future operators are evaluated on the finite domain `[0, d]`: obligations
//! reaching past `d` count as satisfied for `alw` and as unsatisfied for `ev`
//! and `until`.

use thiserror::Error;

use super::ast::{CmpOp, Formula, Interval, Literal, Term};
use super::interval::{IntervalSet, Span};
use super::pwl::PwFn;
use crate::trace::{Domain, Trace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("formula refers to unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("trace has no signals")]
    EmptyTrace,
    #[error("not an invariant of the form `alw (p)` with a state formula p: {0}")]
    NotAnInvariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalOptions {
    /// Half-width of the band accepted by `==`; `0` means exact comparison.
    pub eq_tolerance: f64,
}

/// Times in `[0, end]` at which a formula holds.
#[derive(Debug, Clone, PartialEq)]
pub struct SatisfactionSignal {
    pub end: f64,
    pub intervals: IntervalSet,
}

impl SatisfactionSignal {
    pub fn holds_at(&self, t: f64) -> bool {
        self.intervals.contains(t)
    }

    pub fn spans(&self) -> &[Span] {
        self.intervals.spans()
    }
}

pub fn eval(formula: &Formula, trace: &Trace) -> Result<SatisfactionSignal, EvalError> {
    eval_with(formula, trace, &EvalOptions::default())
}

pub fn eval_with(
    formula: &Formula,
    trace: &Trace,
    options: &EvalOptions,
) -> Result<SatisfactionSignal, EvalError> {
    if trace.signals().is_empty() {
        return Err(EvalError::EmptyTrace);
    }
    if let Some(v) = formula
        .variables()
        .into_iter()
        .find(|v| trace.signal(v).is_none())
    {
        return Err(EvalError::UnknownVariable(v));
    }
    let ctx = Ctx {
        trace,
        end: trace.end(),
        options,
    };
    Ok(SatisfactionSignal {
        end: ctx.end,
        intervals: ctx.formula(formula),
    })
}

/// `Pass` iff the formula holds at time 0.
pub fn verdict(formula: &Formula, trace: &Trace) -> Result<crate::trace::Verdict, EvalError> {
    let sat = eval(formula, trace)?;
    Ok(if sat.holds_at(0.0) {
        crate::trace::Verdict::Pass
    } else {
        crate::trace::Verdict::Fail
    })
}

/// The body `p` of an assertion `alw (p)`.
pub fn invariant_body(assertion: &Formula) -> Result<&Formula, EvalError> {
    match assertion {
        Formula::Always(i, p) if i.is_unbounded_from_zero() && p.is_state_formula() => Ok(p),
        other => Err(EvalError::NotAnInvariant(other.to_string())),
    }
}

/// Maximal intervals of `[0, d]` on which the body of `alw (p)` is false.
pub fn violation_intervals(
    assertion: &Formula,
    trace: &Trace,
    options: &EvalOptions,
) -> Result<Vec<Span>, EvalError> {
    let body = invariant_body(assertion)?;
    let sat = eval_with(body, trace, options)?;
    Ok(sat.intervals.complement(sat.end).into_spans())
}

/// Infimum of the first violation interval, if any.
pub fn first_violation_time(
    assertion: &Formula,
    trace: &Trace,
    options: &EvalOptions,
) -> Result<Option<f64>, EvalError> {
    Ok(violation_intervals(assertion, trace, options)?
        .first()
        .map(|s| s.lo))
}

struct Ctx<'a> {
    trace: &'a Trace,
    end: f64,
    options: &'a EvalOptions,
}

impl Ctx<'_> {
    fn whole(&self) -> IntervalSet {
        IntervalSet::single(Span::closed(0.0, self.end))
    }

    fn formula(&self, f: &Formula) -> IntervalSet {
        let d = self.end;
        match f {
            Formula::True => self.whole(),
            Formula::Compare { term, op, bound } => self.compare(term, *op, *bound),
            Formula::Member { term, set } => self.member(term, set),
            Formula::Not(g) => self.formula(g).complement(d),
            Formula::Or(l, r) => self.formula(l).union(&self.formula(r)),
            Formula::And(l, r) => self.formula(l).intersect(&self.formula(r)),
            Formula::Implies(l, r) => self.formula(l).complement(d).union(&self.formula(r)),
            Formula::Eventually(i, g) => eventually(&self.formula(g), *i, d),
            Formula::Always(i, g) => always(&self.formula(g), *i, d),
            Formula::Until(i, l, r) => until(&self.formula(l), &self.formula(r), *i, d),
            Formula::Rise(g) => rise(&self.formula(g), d),
            Formula::Fall(g) => rise(&self.formula(g).complement(d), d),
        }
    }

    fn term(&self, t: &Term) -> PwFn {
        match t {
            Term::Var(name) => {
                let s = self
                    .trace
                    .signal(name)
                    .expect("variables checked before evaluation");
                let domain = &s.meta().domain;
                PwFn::from_signal(s, self.end, |c| domain.term_value(c))
            }
            Term::Const(c) => PwFn::constant(*c, self.end),
            Term::Neg(a) => self.term(a).map(|v| -v),
            Term::Abs(a) => self.term(a).abs(),
            Term::Scale(c, a) => {
                let c = *c;
                self.term(a).map(|v| c * v)
            }
            Term::Add(a, b) => self.term(a).zip_with(&self.term(b), |x, y| x + y),
            Term::Sub(a, b) => self.term(a).zip_with(&self.term(b), |x, y| x - y),
        }
    }

    fn compare(&self, term: &Term, op: CmpOp, bound: f64) -> IntervalSet {
        let f = self.term(term);
        let eps = self.options.eq_tolerance;
        match op {
            CmpOp::Eq | CmpOp::Ne if eps > 0.0 => {
                let band = f
                    .compare(CmpOp::Ge, bound - eps)
                    .intersect(&f.compare(CmpOp::Le, bound + eps));
                if op == CmpOp::Eq {
                    band
                } else {
                    band.complement(self.end)
                }
            }
            _ => f.compare(op, bound),
        }
    }

    fn member(&self, term: &Term, set: &[Literal]) -> IntervalSet {
        let f = self.term(term);
        let values: Vec<f64> = match term {
            Term::Var(name) => {
                let domain = &self.trace.signal(name).expect("checked").meta().domain;
                literal_values(domain, set)
            }
            _ => literal_values(&Domain::Real, set),
        };
        values
            .into_iter()
            .map(|v| f.compare(CmpOp::Eq, v))
            .fold(IntervalSet::empty(), |acc, s| acc.union(&s))
    }
}

/// Term values denoted by set literals for a variable of `domain`.
/// Literals that name no value of the domain are ignored.
pub fn literal_values(domain: &Domain, set: &[Literal]) -> Vec<f64> {
    match domain {
        Domain::Enum(labels) => labels
            .iter()
            .enumerate()
            .filter(|(_, l)| set.iter().any(|lit| lit.matches_label(l)))
            .map(|(i, _)| domain.term_value(i as f64))
            .collect(),
        Domain::Boolean => set
            .iter()
            .filter_map(|lit| match lit {
                Literal::Num(v) if *v == 0.0 || *v == 1.0 => Some(*v),
                Literal::Label(l) if l == "true" => Some(1.0),
                Literal::Label(l) if l == "false" => Some(0.0),
                _ => None,
            })
            .collect(),
        Domain::Real => set
            .iter()
            .filter_map(|lit| match lit {
                Literal::Num(v) => Some(*v),
                Literal::Label(_) => None,
            })
            .collect(),
    }
}

fn clip(spans: Vec<Span>, d: f64) -> IntervalSet {
    IntervalSet::from_spans(spans).intersect(&IntervalSet::single(Span::closed(0.0, d)))
}

/// `{t : exists t' in (t + I) ∩ [0,d] with t' in s}`.
pub(crate) fn eventually(s: &IntervalSet, i: Interval, d: f64) -> IntervalSet {
    let spans = s
        .spans()
        .iter()
        .map(|sp| Span::new(sp.lo - i.hi, sp.lo_closed, sp.hi - i.lo, sp.hi_closed))
        .collect();
    clip(spans, d)
}

/// `{t : (t + I) ∩ [0,d] ⊆ s}`; vacuously true when the window is empty.
pub(crate) fn always(s: &IntervalSet, i: Interval, d: f64) -> IntervalSet {
    let mut spans: Vec<Span> = Vec::new();
    for sp in s.spans() {
        // the window [t+a, min(t+b, d)] must fit inside this span
        let reaches_end = sp.hi == d && sp.hi_closed;
        let (hi, hi_closed) = if reaches_end {
            (f64::INFINITY, false)
        } else {
            (sp.hi - i.hi, sp.hi_closed)
        };
        spans.push(Span::new(sp.lo - i.lo, sp.lo_closed, hi, hi_closed));
    }
    if i.lo > 0.0 {
        spans.push(Span::new(d - i.lo, false, d, true));
    }
    clip(spans, d)
}

/// `{t : exists t' in t + I, t' <= d, s2 at t' and s1 on [t, t')}`.
pub(crate) fn until(s1: &IntervalSet, s2: &IntervalSet, i: Interval, d: f64) -> IntervalSet {
    let mut out = if i.lo == 0.0 {
        s2.clone()
    } else {
        IntervalSet::empty()
    };
    for k in s1.spans() {
        let k_set = IntervalSet::single(*k);
        let k_closure = IntervalSet::single(Span {
            hi_closed: true,
            ..*k
        });
        let reach = eventually(&s2.intersect(&k_closure), i, d);
        out = out.union(&k_set.intersect(&reach));
    }
    out
}

/// `s` restricted to times after the first moment at which `s` failed.
pub(crate) fn rise(s: &IntervalSet, d: f64) -> IntervalSet {
    match s.complement(d).infimum() {
        Some(inf) => s.intersect(&IntervalSet::single(Span::new(inf, false, d, true))),
        None => IntervalSet::empty(),
    }
}
