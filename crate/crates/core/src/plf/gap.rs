//! Exact extrema of `f(t) - f(s) - g(t - s)` over interval pairs.
//!
//! Envelope compliance (`A(s,t) <= E(t-s)`), service compliance
//! (`C(s,t) >= S(t-s)`), and strict service curve checks all reduce to the
//! sign of the supremum or infimum of this gap over `s <= t`. In the
//! `(s, tau)` plane with `tau = t - s` the gap is affine on the cells cut by
//! `s = a`, `s + tau = a` (breakpoints of `f`) and `tau = e` (breakpoints of
//! `g`), so the extremum is attained at a cell vertex — as a one-sided limit
//! when the nearest cell is half-open because of a jump. The candidate set
//! below enumerates every vertex together with every realizable combination
//! of one-sided limits, which makes the result exact for arbitrary jumps.

use super::Plf;
use crate::rational::{q, Ext, Q};
use num_traits::{Signed, Zero};

/// An actual violating pair for a compliance check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GapWitness {
    pub s: Q,
    pub t: Q,
    /// `f(t) - f(s) - g(t-s)` at the witness pair.
    pub excess: Q,
}

struct Candidate {
    value: Q,
    s: Q,
    t: Q,
    flags: (bool, bool, bool), // right-limit at s, at t, at tau
}

/// Supremum of the gap over `0 <= s <= t` (unbounded domain).
pub(crate) fn sup_gap(f: &Plf, g: &Plf) -> Ext {
    if f.last_slope() > g.last_slope() {
        return Ext::PosInf;
    }
    let best = candidates_unbounded(f, g)
        .into_iter()
        .map(|c| c.value)
        .max()
        .expect("candidate set is nonempty");
    Ext::Finite(best)
}

/// Infimum of the gap over `0 <= s <= t` (unbounded domain).
pub(crate) fn inf_gap(f: &Plf, g: &Plf) -> Ext {
    if f.last_slope() < g.last_slope() {
        return Ext::NegInf;
    }
    let best = candidates_unbounded(f, g)
        .into_iter()
        .map(|c| c.value)
        .min()
        .expect("candidate set is nonempty");
    Ext::Finite(best)
}

/// Infimum of the gap over `lo <= s <= t <= hi`, with the minimizing corner.
pub(crate) fn inf_gap_window(f: &Plf, g: &Plf, lo: &Q, hi: &Q) -> (Q, (Q, Q)) {
    assert!(lo < hi, "window must have positive length");
    let cands = candidates(f, g, lo, Some(hi));
    let best = cands
        .into_iter()
        .min_by(|a, b| a.value.cmp(&b.value))
        .expect("candidate set is nonempty");
    (best.value, (best.s, best.t))
}

/// For a violated envelope, produces an actual `(s, t)` pair with positive
/// excess by nudging the maximizing corner into the open cell the limit was
/// taken from.
pub(crate) fn sup_gap_witness(f: &Plf, g: &Plf) -> Option<GapWitness> {
    if f.last_slope() > g.last_slope() {
        // gap grows without bound along tau; walk out until positive
        let mut t = f.last_start().max(g.last_start()) + q(1);
        for _ in 0..64 {
            let excess = f.eval(&t) - g.eval(&t);
            if excess.is_positive() {
                return Some(GapWitness {
                    s: Q::zero(),
                    t,
                    excess,
                });
            }
            t *= q(2);
        }
        unreachable!("positive recession slope must eventually dominate");
    }
    let best = candidates_unbounded(f, g)
        .into_iter()
        .max_by(|a, b| a.value.cmp(&b.value))?;
    if !best.value.is_positive() {
        return None;
    }
    Some(realize(f, g, &best))
}

fn gap_at(f: &Plf, g: &Plf, s: &Q, t: &Q) -> Q {
    f.eval(t) - f.eval(s) - g.eval(&(t - s))
}

/// Turns a positive corner limit into an actual violating pair.
fn realize(f: &Plf, g: &Plf, c: &Candidate) -> GapWitness {
    let (js, jt, jtau) = c.flags;
    if !js && !jt && !jtau {
        return GapWitness {
            s: c.s.clone(),
            t: c.t.clone(),
            excess: c.value.clone(),
        };
    }
    let mut eps = crate::rational::qr(1, 2);
    if c.s.is_positive() {
        eps = eps.min(&c.s / q(2));
    }
    for _ in 0..256 {
        let (s, t) = match (js, jt, jtau) {
            (_, true, true) => (&c.s + if js { &eps / q(2) } else { Q::zero() }, &c.t + &eps),
            (false, false, true) => (&c.s - &eps, c.t.clone()),
            (true, true, false) => (&c.s + &eps, &c.t + &eps),
            (true, false, false) => (&c.s + &eps, c.t.clone()),
            _ => unreachable!("infeasible flag combination"),
        };
        let excess = gap_at(f, g, &s, &t);
        if excess.is_positive() && !s.is_negative() && s <= t {
            return GapWitness { s, t, excess };
        }
        eps /= q(2);
    }
    unreachable!("a positive one-sided limit admits nearby positive points")
}

fn candidates_unbounded(f: &Plf, g: &Plf) -> Vec<Candidate> {
    candidates(f, g, &Q::zero(), None)
}

/// Enumerates all cell vertices and feasible one-sided limits of the gap
/// over `lo <= s <= t (<= hi)`.
fn candidates(f: &Plf, g: &Plf, lo: &Q, hi: Option<&Q>) -> Vec<Candidate> {
    let mut s_lines: Vec<Q> = vec![lo.clone()];
    for b in f.breakpoints() {
        if b > lo && hi.is_none_or(|h| b < h) {
            s_lines.push(b.clone());
        }
    }
    if let Some(h) = hi {
        s_lines.push(h.clone());
    }
    s_lines.sort();
    s_lines.dedup();

    let mut tau_lines: Vec<Q> = vec![Q::zero()];
    let span = hi.map(|h| h - lo);
    for b in g.breakpoints() {
        if b.is_positive() && span.as_ref().is_none_or(|sp| b <= sp) {
            tau_lines.push(b.clone());
        }
    }
    tau_lines.sort();
    tau_lines.dedup();

    let mut corners: Vec<(Q, Q)> = Vec::new();
    for a in &s_lines {
        for b in &s_lines {
            if a <= b {
                corners.push((a.clone(), b.clone()));
            }
        }
        for e in &tau_lines {
            let t = a + e;
            if hi.is_none_or(|h| &t <= h) {
                corners.push((a.clone(), t));
            }
        }
    }
    for b in &s_lines {
        for e in &tau_lines {
            let s = b - e;
            if &s >= lo {
                corners.push((s, b.clone()));
            }
        }
    }
    corners.sort();
    corners.dedup();

    let mut out = Vec::with_capacity(corners.len() * 4);
    for (vs, vt) in corners {
        let vtau = &vt - &vs;
        debug_assert!(!vtau.is_negative());
        for flags in 0..8u8 {
            let js = flags & 1 != 0;
            let jt = flags & 2 != 0;
            let jtau = flags & 4 != 0;
            if !feasible(js, jt, jtau, &vs, &vt, &vtau, lo, hi) {
                continue;
            }
            let value = (if jt { f.eval_right(&vt) } else { f.eval(&vt) })
                - (if js { f.eval_right(&vs) } else { f.eval(&vs) })
                - (if jtau {
                    g.eval_right(&vtau)
                } else {
                    g.eval(&vtau)
                });
            out.push(Candidate {
                value,
                s: vs.clone(),
                t: vt.clone(),
                flags: (js, jt, jtau),
            });
        }
    }
    out
}

/// Whether points realizing the given one-sided limit exist: each `true`
/// flag needs an approach from the right of the corner coordinate, subject
/// to `lo <= s <= t <= hi` and `tau = t - s >= 0`.
#[allow(clippy::too_many_arguments)]
fn feasible(
    js: bool,
    jt: bool,
    jtau: bool,
    vs: &Q,
    vt: &Q,
    vtau: &Q,
    lo: &Q,
    hi: Option<&Q>,
) -> bool {
    if jt && hi.is_some_and(|h| vt >= h) {
        return false;
    }
    if js && !(vs < vt || jt) {
        return false;
    }
    if jtau {
        // delta_tau > 0 needs t moving right or s moving left
        if !(jt || (!js && vs > lo)) {
            return false;
        }
    } else {
        // delta_tau <= 0, and tau must stay nonnegative
        if vtau.is_zero() {
            if jt != js {
                return false;
            }
        } else if jt && !js {
            return false;
        }
    }
    true
}
