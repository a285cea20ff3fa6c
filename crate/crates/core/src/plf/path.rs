//! General piecewise-linear paths.
//!
//! Backlogs are continuous piecewise-linear except for drops at service
//! jumps, so they are not monotone and cannot be a [`Plf`](super::Plf).
//! A [`PlPath`] shares the segment representation and left-continuous
//! evaluation but allows jumps and slopes of either sign.

use super::Plf;
use crate::rational::Q;
use num_traits::{Signed, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
struct PathSeg {
    start: Q,
    jump: Q,
    slope: Q,
    base: Q,
}

/// Left-continuous piecewise-linear path, zero on `t <= 0`; jumps and
/// slopes may be negative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlPath {
    segs: Vec<PathSeg>,
}

impl PlPath {
    /// Builds from `(start, jump, slope)` triples; starts must be strictly
    /// increasing beginning at 0.
    pub fn new(segments: Vec<(Q, Q, Q)>) -> PlPath {
        assert!(!segments.is_empty(), "path needs at least one segment");
        assert!(segments[0].0.is_zero(), "path must start at t = 0");
        let mut segs: Vec<PathSeg> = Vec::with_capacity(segments.len());
        for (start, jump, slope) in segments {
            let base = match segs.last() {
                None => Q::zero(),
                Some(prev) => {
                    assert!(prev.start < start, "starts must increase");
                    seg_value(prev, &start)
                }
            };
            segs.push(PathSeg {
                start,
                jump,
                slope,
                base,
            });
        }
        PlPath { segs }
    }

    pub fn zero() -> PlPath {
        PlPath::new(vec![(Q::zero(), Q::zero(), Q::zero())])
    }

    /// Difference `a - d` of two monotone PLFs (e.g. backlog = arrivals
    /// minus departures).
    pub fn difference(a: &Plf, d: &Plf) -> PlPath {
        let mut cuts: Vec<Q> = a.breakpoints().chain(d.breakpoints()).cloned().collect();
        cuts.sort();
        cuts.dedup();
        let segs = cuts
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let jump = a.jump_at(c) - d.jump_at(c);
                let probe = match cuts.get(i + 1) {
                    Some(n) => (c + n) / crate::rational::q(2),
                    None => c + crate::rational::q(1),
                };
                let (_, sa) = a.form_at(&probe);
                let (_, sd) = d.form_at(&probe);
                (c.clone(), jump, sa - sd)
            })
            .collect();
        PlPath::new(segs)
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = &Q> {
        self.segs.iter().map(|s| &s.start)
    }

    fn seg_index_at(&self, t: &Q) -> Option<usize> {
        if t <= &self.segs[0].start {
            return None;
        }
        let i = self.segs.partition_point(|s| &s.start < t);
        Some(i - 1)
    }

    /// Left-continuous evaluation; zero for `t <= 0`.
    pub fn eval(&self, t: &Q) -> Q {
        match self.seg_index_at(t) {
            None => Q::zero(),
            Some(i) => seg_value(&self.segs[i], t),
        }
    }

    pub fn eval_right(&self, t: &Q) -> Q {
        if t.is_negative() {
            return Q::zero();
        }
        self.eval(t) + self.jump_at(t)
    }

    pub fn jump_at(&self, t: &Q) -> Q {
        match self.segs.binary_search_by(|s| s.start.cmp(t)) {
            Ok(i) => self.segs[i].jump.clone(),
            Err(_) => Q::zero(),
        }
    }

    /// All times in `[0, horizon]` where the path can change linearity or
    /// cross zero: segment starts plus interior zero crossings.
    fn critical_times(&self, horizon: &Q) -> Vec<Q> {
        let mut times: Vec<Q> = vec![Q::zero(), horizon.clone()];
        for s in &self.segs {
            if s.start.is_positive() && &s.start < horizon {
                times.push(s.start.clone());
            }
        }
        // interior zeros of each affine piece
        for (i, s) in self.segs.iter().enumerate() {
            if s.slope.is_zero() {
                continue;
            }
            let v0 = &s.base + &s.jump; // right limit at start
            let root = &s.start - v0 / &s.slope;
            let upper = self.segs.get(i + 1).map(|n| &n.start);
            let in_piece = root > s.start && upper.is_none_or(|u| &root < u) && &root < horizon;
            if in_piece {
                times.push(root);
            }
        }
        times.sort();
        times.dedup();
        times
    }

    /// Infimum of the path over actual points of `[0, horizon]`, taking
    /// one-sided limits at jumps into account (the infimum may be a limit).
    pub fn lower_bound_on(&self, horizon: &Q) -> Q {
        let mut best = Q::zero(); // value at t = 0
        for c in self.critical_times(horizon) {
            let v = self.eval(&c);
            if v < best {
                best = v.clone();
            }
            if &c < horizon {
                let vr = self.eval_right(&c);
                if vr < best {
                    best = vr;
                }
            }
        }
        best
    }

    /// Maximal windows `[a, b]` within `[0, horizon]` such that the path is
    /// strictly positive on the open interval `(a, b)`. Interior zeros
    /// split windows even when the path only touches zero.
    pub fn positive_windows(&self, horizon: &Q) -> Vec<(Q, Q)> {
        let times = self.critical_times(horizon);
        let mut windows: Vec<(Q, Q)> = Vec::new();
        for w in times.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let mid = (a + b) / crate::rational::q(2);
            if !self.eval(&mid).is_positive() {
                continue;
            }
            match windows.last_mut() {
                // merge when the shared point is itself positive
                Some((_, end)) if end == a && self.eval(a).is_positive() => {
                    *end = b.clone();
                }
                _ => windows.push((a.clone(), b.clone())),
            }
        }
        windows
    }
}

fn seg_value(seg: &PathSeg, t: &Q) -> Q {
    &seg.base + &seg.jump + &seg.slope * (t - &seg.start)
}
