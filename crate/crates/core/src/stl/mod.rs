//! Signal temporal logic: syntax, parsing and offline boolean monitoring.

mod ast;
mod eval;
mod interval;
mod parser;
mod pwl;

pub use ast::{CmpOp, Formula, Interval, Literal, Term};
pub use eval::{
    eval, eval_with, first_violation_time, invariant_body, literal_values, verdict,
    violation_intervals, EvalError, EvalOptions, SatisfactionSignal,
};
pub use interval::{IntervalSet, Span};
pub use parser::{parse_formula, ParseError};
pub use pwl::PwFn;
