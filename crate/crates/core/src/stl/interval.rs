//! Finite unions of real intervals with explicit open/closed endpoints.

use std::fmt;

use serde::{Deserialize, Serialize};

/// One interval `<lo, hi>`; each endpoint is tagged closed or open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub lo: f64,
    pub lo_closed: bool,
    pub hi: f64,
    pub hi_closed: bool,
}

impl Span {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            lo_closed: true,
            hi,
            hi_closed: true,
        }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            lo_closed: false,
            hi,
            hi_closed: false,
        }
    }

    pub fn point(t: f64) -> Self {
        Self::closed(t, t)
    }

    pub fn new(lo: f64, lo_closed: bool, hi: f64, hi_closed: bool) -> Self {
        Self {
            lo,
            lo_closed,
            hi,
            hi_closed,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn contains(&self, t: f64) -> bool {
        let above = if self.lo_closed {
            t >= self.lo
        } else {
            t > self.lo
        };
        let below = if self.hi_closed {
            t <= self.hi
        } else {
            t < self.hi
        };
        above && below
    }

    pub fn length(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    fn intersect(&self, other: &Span) -> Span {
        let (lo, lo_closed) = if self.lo > other.lo {
            (self.lo, self.lo_closed)
        } else if other.lo > self.lo {
            (other.lo, other.lo_closed)
        } else {
            (self.lo, self.lo_closed && other.lo_closed)
        };
        let (hi, hi_closed) = if self.hi < other.hi {
            (self.hi, self.hi_closed)
        } else if other.hi < self.hi {
            (other.hi, other.hi_closed)
        } else {
            (self.hi, self.hi_closed && other.hi_closed)
        };
        Span {
            lo,
            lo_closed,
            hi,
            hi_closed,
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

/// Sorted, disjoint, maximally merged list of non-empty spans.
///
/// Normalization is canonical: two sets describing the same points compare
/// equal.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntervalSet {
    spans: Vec<Span>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(span: Span) -> Self {
        Self::from_spans(vec![span])
    }

    pub fn from_spans(mut spans: Vec<Span>) -> Self {
        spans.retain(|s| !s.is_empty());
        spans.sort_by(|a, b| {
            a.lo.total_cmp(&b.lo)
                .then_with(|| b.lo_closed.cmp(&a.lo_closed))
        });
        let mut out: Vec<Span> = Vec::with_capacity(spans.len());
        for s in spans {
            match out.last_mut() {
                Some(cur)
                    if s.lo < cur.hi || (s.lo == cur.hi && (cur.hi_closed || s.lo_closed)) =>
                {
                    if s.hi > cur.hi {
                        cur.hi = s.hi;
                        cur.hi_closed = s.hi_closed;
                    } else if s.hi == cur.hi {
                        cur.hi_closed |= s.hi_closed;
                    }
                }
                _ => out.push(s),
            }
        }
        Self { spans: out }
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn into_spans(self) -> Vec<Span> {
        self.spans
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn contains(&self, t: f64) -> bool {
        // spans are sorted, so only the last span starting at or before t matters
        let idx = self.spans.partition_point(|s| s.lo <= t);
        idx > 0 && self.spans[idx - 1].contains(t)
    }

    /// Greatest lower bound of the set.
    pub fn infimum(&self) -> Option<f64> {
        self.spans.first().map(|s| s.lo)
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut all = self.spans.clone();
        all.extend_from_slice(&other.spans);
        Self::from_spans(all)
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.spans.len() && j < other.spans.len() {
            let (a, b) = (&self.spans[i], &other.spans[j]);
            let s = a.intersect(b);
            if !s.is_empty() {
                out.push(s);
            }
            // advance whichever span ends first
            let a_first = a.hi < b.hi || (a.hi == b.hi && !a.hi_closed);
            if a_first {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self::from_spans(out)
    }

    /// Complement relative to `[0, end]`.
    pub fn complement(&self, end: f64) -> IntervalSet {
        let mut out = Vec::new();
        let (mut lo, mut lo_closed) = (0.0, true);
        for s in &self.spans {
            out.push(Span::new(lo, lo_closed, s.lo, !s.lo_closed));
            lo = s.hi;
            lo_closed = !s.hi_closed;
        }
        out.push(Span::new(lo, lo_closed, end, true));
        Self::from_spans(out)
    }

    /// Total measure of the set.
    pub fn measure(&self) -> f64 {
        self.spans.iter().map(Span::length).sum()
    }
}
