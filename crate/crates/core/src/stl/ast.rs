use std::collections::BTreeSet;
use std::fmt;

/// Arithmetic term over signal variables. Only affine combinations and
/// `abs` are supported, which keeps every term piecewise-linear.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Var(String),
    Const(f64),
    Neg(Box<Term>),
    Abs(Box<Term>),
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
    Scale(f64, Box<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn sub(l: Term, r: Term) -> Term {
        Term::Sub(Box::new(l), Box::new(r))
    }

    pub fn add(l: Term, r: Term) -> Term {
        Term::Add(Box::new(l), Box::new(r))
    }

    pub fn scale(c: f64, t: Term) -> Term {
        Term::Scale(c, Box::new(t))
    }

    pub fn abs(t: Term) -> Term {
        Term::Abs(Box::new(t))
    }

    /// Evaluates the term at a single point. Variable lookup failures yield
    /// `None`.
    pub fn eval_point(&self, lookup: &impl Fn(&str) -> Option<f64>) -> Option<f64> {
        Some(match self {
            Term::Var(v) => lookup(v)?,
            Term::Const(c) => *c,
            Term::Neg(t) => -t.eval_point(lookup)?,
            Term::Abs(t) => t.eval_point(lookup)?.abs(),
            Term::Add(l, r) => l.eval_point(lookup)? + r.eval_point(lookup)?,
            Term::Sub(l, r) => l.eval_point(lookup)? - r.eval_point(lookup)?,
            Term::Scale(c, t) => c * t.eval_point(lookup)?,
        })
    }

    pub fn variables(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Const(_) => {}
            Term::Neg(t) | Term::Abs(t) | Term::Scale(_, t) => t.variables(out),
            Term::Add(l, r) | Term::Sub(l, r) => {
                l.variables(out);
                r.variables(out);
            }
        }
    }

    fn is_sum(&self) -> bool {
        matches!(self, Term::Add(..) | Term::Sub(..))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Gt,
    Ge,
    Lt,
    Le,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }

    /// The operator obtained by swapping the operands.
    pub fn flipped(self) -> CmpOp {
        match self {
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            other => other,
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
        }
    }
}

/// Element of a set literal: a number or an enumeration label.
#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Num(f64),
    Label(String),
}

impl Literal {
    /// Numeric labels such as `"2"` become numbers so that the rendered
    /// form parses back to the same literal.
    pub fn from_label(label: &str) -> Literal {
        match label.parse::<f64>() {
            Ok(v) if format!("{v}") == label => Literal::Num(v),
            _ => Literal::Label(label.to_string()),
        }
    }

    /// Whether this literal denotes the enumeration label `label`.
    pub fn matches_label(&self, label: &str) -> bool {
        match self {
            Literal::Label(l) => l == label,
            Literal::Num(v) => label.parse::<f64>().map_or(false, |x| x == *v),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Num(v) => write!(f, "{v}"),
            Literal::Label(l) => f.write_str(l),
        }
    }
}

/// Closed time interval `[lo, hi]`; `hi` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const UNBOUNDED: Interval = Interval {
        lo: 0.0,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Option<Interval> {
        (lo.is_finite() && lo >= 0.0 && lo <= hi && !hi.is_nan()).then_some(Interval { lo, hi })
    }

    pub fn is_unbounded_from_zero(&self) -> bool {
        *self == Self::UNBOUNDED
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.hi.is_infinite() {
            write!(f, "[{},inf]", self.lo)
        } else {
            write!(f, "[{},{}]", self.lo, self.hi)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    Compare { term: Term, op: CmpOp, bound: f64 },
    Member { term: Term, set: Vec<Literal> },
    Not(Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Until(Interval, Box<Formula>, Box<Formula>),
    Eventually(Interval, Box<Formula>),
    Always(Interval, Box<Formula>),
    Rise(Box<Formula>),
    Fall(Box<Formula>),
}

impl Formula {
    pub fn compare(term: Term, op: CmpOp, bound: f64) -> Formula {
        Formula::Compare { term, op, bound }
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn implies(l: Formula, r: Formula) -> Formula {
        Formula::Implies(Box::new(l), Box::new(r))
    }

    pub fn until(i: Interval, l: Formula, r: Formula) -> Formula {
        Formula::Until(i, Box::new(l), Box::new(r))
    }

    pub fn eventually(i: Interval, f: Formula) -> Formula {
        Formula::Eventually(i, Box::new(f))
    }

    pub fn always(i: Interval, f: Formula) -> Formula {
        Formula::Always(i, Box::new(f))
    }

    /// `alw (p)` over the whole trace.
    pub fn invariant(p: Formula) -> Formula {
        Formula::always(Interval::UNBOUNDED, p)
    }

    /// True when the formula contains no temporal operator (edges included).
    pub fn is_state_formula(&self) -> bool {
        match self {
            Formula::True | Formula::Compare { .. } | Formula::Member { .. } => true,
            Formula::Not(f) => f.is_state_formula(),
            Formula::Or(l, r) | Formula::And(l, r) | Formula::Implies(l, r) => {
                l.is_state_formula() && r.is_state_formula()
            }
            _ => false,
        }
    }

    /// Names of all variables mentioned, sorted.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True => {}
            Formula::Compare { term, .. } | Formula::Member { term, .. } => term.variables(out),
            Formula::Not(f)
            | Formula::Eventually(_, f)
            | Formula::Always(_, f)
            | Formula::Rise(f)
            | Formula::Fall(f) => f.collect_variables(out),
            Formula::Or(l, r)
            | Formula::And(l, r)
            | Formula::Implies(l, r)
            | Formula::Until(_, l, r) => {
                l.collect_variables(out);
                r.collect_variables(out);
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::Compare { .. } | Formula::Member { .. } => 0,
            Formula::Not(f)
            | Formula::Eventually(_, f)
            | Formula::Always(_, f)
            | Formula::Rise(f)
            | Formula::Fall(f) => 1 + f.depth(),
            Formula::Or(l, r)
            | Formula::And(l, r)
            | Formula::Implies(l, r)
            | Formula::Until(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    fn is_binary(&self) -> bool {
        matches!(
            self,
            Formula::Or(..) | Formula::And(..) | Formula::Implies(..) | Formula::Until(..)
        )
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) => write!(f, "{c}"),
            Term::Neg(t) => match **t {
                Term::Var(_) | Term::Abs(_) => write!(f, "-{t}"),
                _ => write!(f, "-({t})"),
            },
            Term::Abs(t) => write!(f, "abs({t})"),
            Term::Add(l, r) if r.is_sum() => write!(f, "{l} + ({r})"),
            Term::Add(l, r) => write!(f, "{l} + {r}"),
            Term::Sub(l, r) if r.is_sum() => write!(f, "{l} - ({r})"),
            Term::Sub(l, r) => write!(f, "{l} - {r}"),
            Term::Scale(c, t) => match **t {
                Term::Var(_) | Term::Abs(_) => write!(f, "{c}*{t}"),
                _ => write!(f, "{c}*({t})"),
            },
        }
    }
}

struct Operand<'a>(&'a Formula);

impl fmt::Display for Operand<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_binary() {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

fn interval_suffix(i: &Interval) -> String {
    if i.is_unbounded_from_zero() {
        String::new()
    } else {
        i.to_string()
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::Compare {
                term: Term::Sub(l, r),
                op,
                bound,
            } if *bound == 0.0
                && !bound.is_sign_negative()
                && !matches!(**l, Term::Const(_))
                && !matches!(**r, Term::Const(_)) =>
            {
                write!(f, "{l} {} {r}", op.symbol())
            }
            Formula::Compare { term, op, bound } => write!(f, "{term} {} {bound}", op.symbol()),
            Formula::Member { term, set } => {
                let items: Vec<String> = set.iter().map(ToString::to_string).collect();
                write!(f, "{term} in {{{}}}", items.join(","))
            }
            Formula::Not(g) => write!(f, "not ({g})"),
            Formula::Or(l, r) => write!(f, "{} or {}", Operand(l), Operand(r)),
            Formula::And(l, r) => write!(f, "{} and {}", Operand(l), Operand(r)),
            Formula::Implies(l, r) => write!(f, "{} -> {}", Operand(l), Operand(r)),
            Formula::Until(i, l, r) => {
                write!(
                    f,
                    "{} until{} {}",
                    Operand(l),
                    interval_suffix(i),
                    Operand(r)
                )
            }
            Formula::Eventually(i, g) => write!(f, "ev{} ({g})", interval_suffix(i)),
            Formula::Always(i, g) => write!(f, "alw{} ({g})", interval_suffix(i)),
            Formula::Rise(g) => write!(f, "rise({g})"),
            Formula::Fall(g) => write!(f, "fall({g})"),
        }
    }
}
