//! Left-continuous, nondecreasing piecewise-linear functions.
//!
//! A [`Plf`] is the cumulative-process representation used everywhere in
//! this crate: arrivals, departures, service processes, envelopes, and
//! service curves are all instances. The function is zero for `t <= 0` and
//! is described by segments `(start, jump, slope)`: on `(start, next_start]`
//! the value is `value(start) + jump + slope * (t - start)`. Evaluation is
//! left-continuous, so a jump at `start` takes effect only for `t > start`.

mod gap;
mod path;

pub use gap::GapWitness;
pub use path::PlPath;

use crate::rational::{Ext, Q};
use num_traits::{Signed, Zero};

/// Segment of a [`Plf`]: jump then constant slope, starting at `start`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub start: Q,
    pub jump: Q,
    pub slope: Q,
    /// Value at `start` (the left limit); derived at construction.
    base: Q,
}

/// Shape classification of a [`Plf`].
///
/// Concave allows a jump at `0+` (the token-bucket burst) but nowhere else;
/// convex forbids jumps entirely. A single affine segment through the
/// origin with no jump is both.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Concave,
    Convex,
    Both,
    Neither,
}

impl Shape {
    pub fn is_concave(self) -> bool {
        matches!(self, Shape::Concave | Shape::Both)
    }

    pub fn is_convex(self) -> bool {
        matches!(self, Shape::Convex | Shape::Both)
    }
}

/// Affine piece `intercept + slope * t`. As a token bucket the intercept is
/// the burst `sigma >= 0`; as a latency-rate piece the intercept is `-R * L`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffinePiece {
    pub intercept: Q,
    pub slope: Q,
}

impl AffinePiece {
    pub fn new(intercept: Q, slope: Q) -> Self {
        assert!(!slope.is_negative(), "affine piece needs slope >= 0");
        AffinePiece { intercept, slope }
    }

    pub fn eval(&self, t: &Q) -> Q {
        &self.intercept + &self.slope * t
    }

    /// Latency `L = -intercept / slope` of a latency-rate piece.
    pub fn latency(&self) -> Option<Q> {
        if self.slope.is_zero() {
            None
        } else {
            Some(-&self.intercept / &self.slope)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlfError {
    #[error("a PLF needs at least one segment")]
    Empty,
    #[error("first segment must start at t = 0, got {0}")]
    FirstStartNonzero(Q),
    #[error("segment starts must be strictly increasing at index {0}")]
    StartsNotIncreasing(usize),
    #[error("negative jump {jump} at segment {index}")]
    NegativeJump { index: usize, jump: Q },
    #[error("negative slope {slope} at segment {index}")]
    NegativeSlope { index: usize, slope: Q },
    #[error("invalid interval: need 0 <= s <= t, got s={s}, t={t}")]
    BadInterval { s: Q, t: Q },
    #[error("tangent requires tau > 0, got {0}")]
    TangentAtNonpositive(Q),
}

/// Left-continuous nondecreasing piecewise-linear function, zero on `t <= 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plf {
    segs: Vec<Segment>,
}

impl Plf {
    /// Builds a PLF from `(start, jump, slope)` triples, validating the
    /// invariants: starts strictly increasing from 0, jumps and slopes
    /// nonnegative. Redundant segments are kept as given.
    pub fn new(segments: Vec<(Q, Q, Q)>) -> Result<Plf, PlfError> {
        if segments.is_empty() {
            return Err(PlfError::Empty);
        }
        if !segments[0].0.is_zero() {
            return Err(PlfError::FirstStartNonzero(segments[0].0.clone()));
        }
        let mut segs = Vec::with_capacity(segments.len());
        let mut base = Q::zero();
        let mut prev_start: Option<Q> = None;
        for (index, (start, jump, slope)) in segments.into_iter().enumerate() {
            if let Some(p) = &prev_start {
                if &start <= p {
                    return Err(PlfError::StartsNotIncreasing(index));
                }
                // accumulate value up to the new start
                let prev = segs.last().expect("nonempty");
                base = value_on(prev, &start);
            }
            if jump.is_negative() {
                return Err(PlfError::NegativeJump { index, jump });
            }
            if slope.is_negative() {
                return Err(PlfError::NegativeSlope { index, slope });
            }
            prev_start = Some(start.clone());
            segs.push(Segment {
                start,
                jump,
                slope,
                base,
            });
            base = Q::zero(); // recomputed each round from `value_on`
        }
        Ok(Plf { segs })
    }

    /// The zero function.
    pub fn zero() -> Plf {
        Plf::constant_rate(Q::zero())
    }

    /// `t -> rate * t` for `t > 0`.
    pub fn constant_rate(rate: Q) -> Plf {
        Plf::new(vec![(Q::zero(), Q::zero(), rate)]).expect("valid")
    }

    /// Token bucket `sigma + rho * t` on `t > 0` (burst as a jump at `0+`).
    pub fn token_bucket(sigma: Q, rho: Q) -> Plf {
        Plf::new(vec![(Q::zero(), sigma, rho)]).expect("valid")
    }

    /// Latency-rate curve `R * (t - L)` for `t >= L`, zero before.
    pub fn latency_rate(rate: Q, latency: Q) -> Plf {
        assert!(!latency.is_negative(), "latency must be >= 0");
        if latency.is_zero() {
            Plf::constant_rate(rate)
        } else {
            Plf::new(vec![
                (Q::zero(), Q::zero(), Q::zero()),
                (latency, Q::zero(), rate),
            ])
            .expect("valid")
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segs
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = &Q> {
        self.segs.iter().map(|s| &s.start)
    }

    fn seg_index_at(&self, t: &Q) -> Option<usize> {
        // last segment with start < t; none when t <= 0
        let i = self.segs.partition_point(|s| &s.start < t);
        if i == 0 {
            None
        } else {
            Some(i - 1)
        }
    }

    /// Left-continuous evaluation; zero for `t <= 0`.
    pub fn eval(&self, t: &Q) -> Q {
        match self.seg_index_at(t) {
            None => Q::zero(),
            Some(i) => value_on(&self.segs[i], t),
        }
    }

    /// Right limit `f(t+)`; differs from `eval` exactly at jump points
    /// (including `t = 0` when the function has an initial burst).
    pub fn eval_right(&self, t: &Q) -> Q {
        if t.is_negative() {
            return Q::zero();
        }
        self.eval(t) + self.jump_at(t)
    }

    /// Jump at `t` (zero if `t` is not a segment start).
    pub fn jump_at(&self, t: &Q) -> Q {
        match self.segs.binary_search_by(|s| s.start.cmp(t)) {
            Ok(i) => self.segs[i].jump.clone(),
            Err(_) => Q::zero(),
        }
    }

    /// `f(t) - f(s)` with `0 <= s <= t` enforced.
    pub fn range(&self, s: &Q, t: &Q) -> Result<Q, PlfError> {
        if s.is_negative() || s > t {
            return Err(PlfError::BadInterval {
                s: s.clone(),
                t: t.clone(),
            });
        }
        Ok(self.eval(t) - self.eval(s))
    }

    /// Slope of the segment whose half-open interval `(start, next]`
    /// contains `t`; this is the left derivative for `t > 0` away from
    /// jumps. For `t` beyond the last start, the last slope.
    pub fn left_slope(&self, t: &Q) -> Q {
        match self.seg_index_at(t) {
            None => Q::zero(),
            Some(i) => self.segs[i].slope.clone(),
        }
    }

    /// Affine form `(a, b)` with `f(u) = a + b*u` on the segment containing
    /// `t` in its half-open interval. `t` must be positive.
    pub(crate) fn form_at(&self, t: &Q) -> (Q, Q) {
        let i = self.seg_index_at(t).expect("form_at needs t > 0");
        let s = &self.segs[i];
        let a = &s.base + &s.jump - &s.slope * &s.start;
        (a, s.slope.clone())
    }

    pub fn last_slope(&self) -> Q {
        self.segs.last().expect("nonempty").slope.clone()
    }

    pub fn last_start(&self) -> Q {
        self.segs.last().expect("nonempty").start.clone()
    }

    /// Shape classification; see [`Shape`].
    pub fn shape(&self) -> Shape {
        let mut concave = true;
        let mut convex = true;
        for (i, s) in self.segs.iter().enumerate() {
            if !s.jump.is_zero() {
                convex = false;
                if !s.start.is_zero() {
                    concave = false;
                }
            }
            if i > 0 {
                let prev = &self.segs[i - 1].slope;
                if &s.slope > prev {
                    concave = false;
                }
                if &s.slope < prev {
                    convex = false;
                }
            }
        }
        match (concave, convex) {
            (true, true) => Shape::Both,
            (true, false) => Shape::Concave,
            (false, true) => Shape::Convex,
            (false, false) => Shape::Neither,
        }
    }

    /// Tangent line at `tau > 0`, using the left derivative. For a concave
    /// function the tangent dominates the function; for a convex one it is
    /// dominated; equality holds at `tau`.
    pub fn tangent(&self, tau: &Q) -> Result<AffinePiece, PlfError> {
        if !tau.is_positive() {
            return Err(PlfError::TangentAtNonpositive(tau.clone()));
        }
        let slope = self.left_slope(tau);
        let intercept = self.eval(tau) - &slope * tau;
        Ok(AffinePiece { intercept, slope })
    }

    /// Multiplies values by a nonnegative constant.
    pub fn scale(&self, c: &Q) -> Plf {
        assert!(!c.is_negative(), "scale needs c >= 0");
        Plf::new(
            self.segs
                .iter()
                .map(|s| (s.start.clone(), &s.jump * c, &s.slope * c))
                .collect(),
        )
        .expect("scaling preserves validity")
    }

    /// Time-shifts the function right by `d >= 0`: `t -> f(t - d)`.
    pub fn shift_right(&self, d: &Q) -> Plf {
        assert!(!d.is_negative());
        if d.is_zero() {
            return self.clone();
        }
        let mut segs = vec![(Q::zero(), Q::zero(), Q::zero())];
        segs.extend(
            self.segs
                .iter()
                .map(|s| (&s.start + d, s.jump.clone(), s.slope.clone())),
        );
        Plf::new(segs).expect("valid")
    }

    /// Stops accumulation at `tau`: `t -> f(min(t, tau))`.
    pub fn stop_at(&self, tau: &Q) -> Plf {
        assert!(tau.is_positive());
        let mut segs: Vec<(Q, Q, Q)> = Vec::new();
        for s in &self.segs {
            if &s.start < tau {
                segs.push((s.start.clone(), s.jump.clone(), s.slope.clone()));
            }
        }
        segs.push((tau.clone(), Q::zero(), Q::zero()));
        Plf::new(segs).expect("valid")
    }

    /// Merges redundant segments (zero jump, same slope) into a canonical
    /// representation. Two canonical PLFs are equal as functions iff their
    /// segment lists are equal.
    pub fn canonical(&self) -> Plf {
        let mut out: Vec<(Q, Q, Q)> = Vec::with_capacity(self.segs.len());
        for s in &self.segs {
            match out.last() {
                Some(last) if s.jump.is_zero() && last.2 == s.slope => {}
                _ => out.push((s.start.clone(), s.jump.clone(), s.slope.clone())),
            }
        }
        Plf::new(out).expect("valid")
    }

    /// Function equality (independent of redundant breakpoints).
    pub fn equivalent(&self, other: &Plf) -> bool {
        self.canonical().segs == other.canonical().segs
    }

    /// Exact pointwise minimum.
    pub fn min(&self, other: &Plf) -> Plf {
        merge_binary(self, other, |a, b| a.min(b).clone())
    }

    /// Exact pointwise maximum.
    pub fn max(&self, other: &Plf) -> Plf {
        merge_binary(self, other, |a, b| a.max(b).clone())
    }

    /// Exact pointwise sum.
    pub fn add(&self, other: &Plf) -> Plf {
        merge_binary(self, other, |a, b| a + b)
    }

    /// True iff `arrivals(s,t) <= self(t-s)` for all `0 <= s <= t`; exact.
    pub fn complies_envelope(arrivals: &Plf, envelope: &Plf) -> bool {
        gap::sup_gap(arrivals, envelope) <= Ext::zero()
    }

    /// For a non-compliant pair, an actual violating `(s, t)` with the
    /// positive excess `A(s,t) - E(t-s)`.
    pub fn envelope_violation(arrivals: &Plf, envelope: &Plf) -> Option<GapWitness> {
        gap::sup_gap_witness(arrivals, envelope)
    }

    /// True iff `service(s,t) >= self(t-s)` for all `0 <= s <= t`; exact.
    pub fn complies_service(process: &Plf, curve: &Plf) -> bool {
        gap::inf_gap(process, curve) >= Ext::zero()
    }

    /// Exact `inf` of `f(t) - f(s) - g(t-s)` over `lo <= s <= t <= hi`,
    /// where `f = self`. Used for strict service curve checks on a window.
    pub fn inf_gap_window(&self, g: &Plf, lo: &Q, hi: &Q) -> (Q, (Q, Q)) {
        gap::inf_gap_window(self, g, lo, hi)
    }
}

fn value_on(seg: &Segment, t: &Q) -> Q {
    &seg.base + &seg.jump + &seg.slope * (t - &seg.start)
}

/// Merges two PLFs on the union of their breakpoints plus crossing points,
/// combining right-limit affine forms with `combine` (min or sum).
fn merge_binary(f: &Plf, g: &Plf, combine: impl Fn(&Q, &Q) -> Q) -> Plf {
    // union of breakpoints
    let mut cuts: Vec<Q> = f
        .breakpoints()
        .chain(g.breakpoints())
        .cloned()
        .collect::<Vec<_>>();
    cuts.sort();
    cuts.dedup();
    // crossing points inside joint pieces (needed for min)
    let mut extra: Vec<Q> = Vec::new();
    for w in cuts.windows(2) {
        push_crossing(f, g, &w[0], Some(&w[1]), &mut extra);
    }
    push_crossing(f, g, cuts.last().expect("nonempty"), None, &mut extra);
    cuts.extend(extra);
    cuts.sort();
    cuts.dedup();

    let mut segs: Vec<(Q, Q, Q)> = Vec::with_capacity(cuts.len());
    let mut prev_value = Q::zero();
    for (i, c) in cuts.iter().enumerate() {
        // two probe points strictly inside the piece recover its slope
        let (p1, p2) = match cuts.get(i + 1) {
            Some(n) => {
                let third = (n - c) / crate::rational::q(3);
                (c + &third, c + &third + &third)
            }
            None => (c + crate::rational::q(1), c + crate::rational::q(2)),
        };
        let v1 = combine(&f.eval(&p1), &g.eval(&p1));
        let v2 = combine(&f.eval(&p2), &g.eval(&p2));
        let slope = (v2 - &v1) / (&p2 - &p1);
        let left = combine(&f.eval(c), &g.eval(c));
        let right = combine(&f.eval_right(c), &g.eval_right(c));
        let jump = &right - &left;
        debug_assert!(!jump.is_negative());
        debug_assert_eq!(left, prev_value, "merge must stay continuous off jumps");
        debug_assert_eq!(v1, &right + &slope * (&p1 - c), "piece must be affine");
        prev_value = match cuts.get(i + 1) {
            Some(n) => &right + &slope * (n - c),
            None => Q::zero(), // unused
        };
        segs.push((c.clone(), jump, slope));
    }
    Plf::new(segs)
        .expect("merge yields a valid PLF")
        .canonical()
}

fn push_crossing(f: &Plf, g: &Plf, lo: &Q, hi: Option<&Q>, out: &mut Vec<Q>) {
    let probe = match hi {
        Some(h) => (lo + h) / crate::rational::q(2),
        None => lo + crate::rational::q(1),
    };
    let (af, bf) = f.form_at(&probe);
    let (ag, bg) = g.form_at(&probe);
    let db = &bf - &bg;
    if db.is_zero() {
        return;
    }
    let x = (ag - af) / db;
    let inside = x > *lo && hi.is_none_or(|h| &x < h);
    if inside {
        out.push(x);
    }
}
