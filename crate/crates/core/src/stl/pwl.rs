//! Piecewise-linear functions with jumps, used to evaluate terms exactly.

use super::ast::CmpOp;
use super::interval::{IntervalSet, Span};
use crate::trace::Signal;

/// A function on `[0, end]` that is linear on every open segment
/// `(times[i], times[i+1])` and may jump at breakpoints.
///
/// `point[i]` is the value at `times[i]`; `right[i]` and `left[i]` are the
/// limits at the start and end of segment `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PwFn {
    times: Vec<f64>,
    point: Vec<f64>,
    right: Vec<f64>,
    left: Vec<f64>,
}

impl PwFn {
    pub fn constant(c: f64, end: f64) -> Self {
        if end > 0.0 {
            Self {
                times: vec![0.0, end],
                point: vec![c, c],
                right: vec![c],
                left: vec![c],
            }
        } else {
            Self {
                times: vec![0.0],
                point: vec![c],
                right: vec![],
                left: vec![],
            }
        }
    }

    /// Lifts a signal, mapping each stored code through `value`. Past its last
    /// sample the signal holds its final value up to `end`.
    pub fn from_signal(signal: &Signal, end: f64, value: impl Fn(f64) -> f64) -> Self {
        let discrete = signal.meta().domain.is_discrete();
        let mut times = signal.times().to_vec();
        let mut point: Vec<f64> = signal.codes().iter().map(|&c| value(c)).collect();
        let last = *point.last().expect("signals are never empty");
        if signal.last_time() < end {
            times.push(end);
            point.push(last);
        }
        let n = times.len() - 1;
        let right = point[..n].to_vec();
        let left = if discrete {
            right.clone()
        } else {
            point[1..].to_vec()
        };
        Self {
            times,
            point,
            right,
            left,
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn end(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    /// Value at `t`; stored breakpoints are reproduced exactly.
    pub fn value_at(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&s| s <= t);
        let i = idx.saturating_sub(1);
        if self.times[i] == t || i + 1 >= self.times.len() {
            return self.point[i];
        }
        self.interp(i, t)
    }

    fn interp(&self, i: usize, t: f64) -> f64 {
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (r, l) = (self.right[i], self.left[i]);
        if r == l {
            return r;
        }
        r + (l - r) * ((t - t0) / (t1 - t0))
    }

    /// Re-expresses `self` on the finer breakpoint list `grid`, which must
    /// contain every breakpoint of `self`.
    fn refine(&self, grid: &[f64]) -> PwFn {
        let n = grid.len() - 1;
        let mut point = Vec::with_capacity(grid.len());
        let mut right = Vec::with_capacity(n);
        let mut left = Vec::with_capacity(n);
        let mut seg = 0usize;
        for (k, &t) in grid.iter().enumerate() {
            while seg + 1 < self.times.len() - 1 && self.times[seg + 1] <= t {
                seg += 1;
            }
            let on_break = self.times[seg] == t || self.times.get(seg + 1) == Some(&t);
            point.push(if on_break {
                self.value_at(t)
            } else {
                self.interp(seg, t)
            });
            if k < n {
                let t_next = grid[k + 1];
                right.push(if self.times[seg] == t {
                    self.right[seg]
                } else {
                    self.interp(seg, t)
                });
                left.push(if self.times.get(seg + 1) == Some(&t_next) {
                    self.left[seg]
                } else {
                    self.interp(seg, t_next)
                });
            }
        }
        PwFn {
            times: grid.to_vec(),
            point,
            right,
            left,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> PwFn {
        PwFn {
            times: self.times.clone(),
            point: self.point.iter().map(|&v| f(v)).collect(),
            right: self.right.iter().map(|&v| f(v)).collect(),
            left: self.left.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two functions on the merged breakpoints.
    pub fn zip_with(&self, other: &PwFn, f: impl Fn(f64, f64) -> f64) -> PwFn {
        let grid = merge_times(&self.times, &other.times);
        let (a, b) = (self.refine(&grid), other.refine(&grid));
        let comb = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(&p, &q)| f(p, q)).collect();
        PwFn {
            times: grid,
            point: comb(&a.point, &b.point),
            right: comb(&a.right, &b.right),
            left: comb(&a.left, &b.left),
        }
    }

    /// Absolute value; segments whose sign changes are split at the root.
    pub fn abs(&self) -> PwFn {
        let n = self.times.len() - 1;
        let mut out = PwFn {
            times: vec![self.times[0]],
            point: vec![self.point[0].abs()],
            right: vec![],
            left: vec![],
        };
        for i in 0..n {
            let (r, l) = (self.right[i], self.left[i]);
            if r * l < 0.0 {
                if let Some(z) = crossing(self.times[i], self.times[i + 1], r, l, 0.0) {
                    out.right.push(r.abs());
                    out.left.push(0.0);
                    out.times.push(z);
                    out.point.push(0.0);
                    out.right.push(0.0);
                    out.left.push(l.abs());
                    out.times.push(self.times[i + 1]);
                    out.point.push(self.point[i + 1].abs());
                    continue;
                }
            }
            out.right.push(r.abs());
            out.left.push(l.abs());
            out.times.push(self.times[i + 1]);
            out.point.push(self.point[i + 1].abs());
        }
        out
    }

    /// The set of times at which `self op c` holds.
    pub fn compare(&self, op: CmpOp, c: f64) -> IntervalSet {
        let mut spans = Vec::new();
        for (i, &t) in self.times.iter().enumerate() {
            if op.holds(self.point[i], c) {
                spans.push(Span::point(t));
            }
        }
        for i in 0..self.times.len() - 1 {
            let (t0, t1) = (self.times[i], self.times[i + 1]);
            let (r, l) = (self.right[i], self.left[i]);
            let seg = Span::open(t0, t1);
            if r == l {
                if op.holds(r, c) {
                    spans.push(seg);
                }
                continue;
            }
            let Some(z) = crossing(t0, t1, r, l, c) else {
                // c is not strictly inside the range, so every interior point
                // relates to c like the midpoint does
                if op.holds((r + l) / 2.0, c) {
                    spans.push(seg);
                }
                continue;
            };
            // `upper(strict)` is where the piece exceeds c, `lower` where it is below
            let increasing = l > r;
            let upper = |strict: bool| {
                if increasing {
                    Span::new(z, !strict, t1, false)
                } else {
                    Span::new(t0, false, z, !strict)
                }
            };
            let lower = |strict: bool| {
                if increasing {
                    Span::new(t0, false, z, !strict)
                } else {
                    Span::new(z, !strict, t1, false)
                }
            };
            match op {
                CmpOp::Gt => spans.push(upper(true)),
                CmpOp::Ge => spans.push(upper(false)),
                CmpOp::Lt => spans.push(lower(true)),
                CmpOp::Le => spans.push(lower(false)),
                CmpOp::Eq => spans.push(Span::point(z)),
                CmpOp::Ne => {
                    spans.push(Span::open(t0, z));
                    spans.push(Span::open(z, t1));
                }
            }
        }
        IntervalSet::from_spans(spans)
    }
}

/// Time in `[t0, t1]` at which the linear piece from `r` to `l` equals `c`,
/// if it lies strictly inside the segment.
fn crossing(t0: f64, t1: f64, r: f64, l: f64, c: f64) -> Option<f64> {
    if r == l {
        return None;
    }
    let frac = (c - r) / (l - r);
    if !(frac > 0.0 && frac < 1.0) {
        return None;
    }
    let z = t0 + frac * (t1 - t0);
    (z > t0 && z < t1).then_some(z)
}

fn merge_times(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(_), Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        out.push(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> PwFn {
        // 1 at t=0 down to -1 at t=2
        PwFn {
            times: vec![0.0, 2.0],
            point: vec![1.0, -1.0],
            right: vec![1.0],
            left: vec![-1.0],
        }
    }

    #[test]
    fn linear_root_is_exact() {
        let f = ramp();
        assert_eq!(
            f.compare(CmpOp::Gt, 0.0).spans(),
            &[Span::new(0.0, true, 1.0, false)]
        );
        assert_eq!(f.compare(CmpOp::Le, 0.0).spans(), &[Span::closed(1.0, 2.0)]);
        assert_eq!(f.compare(CmpOp::Eq, 0.0).spans(), &[Span::point(1.0)]);
        assert_eq!(
            f.compare(CmpOp::Ne, 0.0).spans(),
            &[
                Span::new(0.0, true, 1.0, false),
                Span::new(1.0, false, 2.0, true)
            ]
        );
    }

    #[test]
    fn abs_splits_at_zero() {
        let f = ramp().abs();
        assert_eq!(f.times(), &[0.0, 1.0, 2.0]);
        assert_eq!(f.value_at(0.5), 0.5);
        assert_eq!(f.compare(CmpOp::Le, 0.5).spans(), &[Span::closed(0.5, 1.5)]);
    }

    #[test]
    fn zip_keeps_jumps() {
        let step = PwFn {
            times: vec![0.0, 1.0, 2.0],
            point: vec![0.0, 1.0, 1.0],
            right: vec![0.0, 1.0],
            left: vec![0.0, 1.0],
        };
        let d = ramp().zip_with(&step, |a, b| a - b);
        assert_eq!(d.times(), &[0.0, 1.0, 2.0]);
        assert_eq!(d.value_at(1.0), -1.0);
        // just before 1 the difference tends to 0 but never reaches it
        assert_eq!(
            d.compare(CmpOp::Ge, 0.0).spans(),
            &[Span::new(0.0, true, 1.0, false)]
        );
    }

    #[test]
    fn touching_threshold_at_vertex() {
        let f = PwFn {
            times: vec![0.0, 1.0, 2.0],
            point: vec![0.0, 1.0, 0.0],
            right: vec![0.0, 1.0],
            left: vec![1.0, 0.0],
        };
        assert_eq!(f.compare(CmpOp::Ge, 1.0).spans(), &[Span::point(1.0)]);
        assert_eq!(f.compare(CmpOp::Gt, 1.0).spans(), &[]);
        assert_eq!(
            f.compare(CmpOp::Lt, 1.0).complement(2.0).spans(),
            &[Span::point(1.0)]
        );
    }
}
