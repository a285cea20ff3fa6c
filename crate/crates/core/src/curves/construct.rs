//! Exact PLF construction of fair-share curves.
//!
//! The curve `t -> f(t)` is the fair share of the allocation problem with
//! requests `E_j(t)` and resource `C(t)`. Within a base interval on which
//! the service curve and every bounded envelope are simultaneously affine,
//! the satisfied set `M(t)` changes only where some request line
//! `E_j(t)` crosses the running level `phi_j * f(t)`; those crossings solve
//! linear equations and become breakpoints of the output. Each player can
//! enter and leave the satisfied set at most once per base interval
//! (`E_j - phi_j f` is concave there), so the scan terminates after at most
//! `2n` membership changes per interval.
//!
//! Without an unbounded request the share becomes `+inf` from the first
//! time `sum_j E_j(t) <= C(t)` on; since `sum E_j - C` is concave and both
//! sides vanish at the origin, that region is a tail, stored as an explicit
//! marker with an exactly solved start.

use crate::maxmin::{self, AllocationProblem};
use crate::plf::Plf;
use crate::rational::{q, Ext, Q};
use num_traits::{Signed, Zero};

#[derive(Debug, Clone)]
pub(crate) enum Request {
    Bounded(Plf),
    Unbounded,
}

#[derive(Debug, Clone)]
pub(crate) struct BuiltCurve {
    pub finite: Plf,
    pub infinite_from: Option<Q>,
}

struct Piece {
    start: Q,
    intercept: Q,
    slope: Q,
}

/// Affine snapshot of the inputs on one base interval.
struct Forms {
    /// `(a_j, b_j)` per bounded request, `None` for unbounded.
    requests: Vec<Option<(Q, Q)>>,
    /// `(g, d)` for the service curve.
    service: (Q, Q),
}

impl Forms {
    fn request_at(&self, j: usize, t: &Q) -> Option<Q> {
        self.requests[j].as_ref().map(|(a, b)| a + b * t)
    }

    fn resource_at(&self, t: &Q) -> Q {
        let (g, d) = &self.service;
        g + d * t
    }
}

pub(crate) fn fair_share_curve(weights: &[Q], reqs: &[Request], service: &Plf) -> BuiltCurve {
    let n = weights.len();
    let total_weight: Q = weights.iter().sum();
    let have_unbounded = reqs.iter().any(|r| matches!(r, Request::Unbounded));

    // base grid: union of all input breakpoints
    let mut cuts: Vec<Q> = service.breakpoints().cloned().collect();
    for r in reqs {
        if let Request::Bounded(p) = r {
            cuts.extend(p.breakpoints().cloned());
        }
    }
    cuts.sort();
    cuts.dedup();

    let mut pieces: Vec<Piece> = Vec::new();
    let mut infinite_from: Option<Q> = None;

    'intervals: for (k, u) in cuts.iter().enumerate() {
        let v = cuts.get(k + 1);
        let probe = match v {
            Some(v) => (u + v) / q(2),
            None => u + q(1),
        };
        let forms = Forms {
            requests: reqs
                .iter()
                .map(|r| match r {
                    Request::Bounded(p) => Some(p.form_at(&probe)),
                    Request::Unbounded => None,
                })
                .collect(),
            service: service.form_at(&probe),
        };
        // exhaustion line h(t) = sum_j E_j(t) - C(t), meaningful only when
        // every request is bounded
        let (h0, h1) = if have_unbounded {
            (Q::zero(), Q::zero())
        } else {
            let mut h0 = -&forms.service.0;
            let mut h1 = -&forms.service.1;
            for r in forms.requests.iter().flatten() {
                h0 += &r.0;
                h1 += &r.1;
            }
            (h0, h1)
        };

        let mut t_c = u.clone();
        let mut guard = 0usize;
        loop {
            guard += 1;
            assert!(
                guard <= 8 * (n + 2) * (n + 2),
                "fair-share curve scan failed to terminate"
            );
            if !have_unbounded {
                let h_here = &h0 + &h1 * &t_c;
                debug_assert!(
                    !h_here.is_negative(),
                    "exhaustion must be caught at its boundary"
                );
                if h_here.is_zero() && !h1.is_positive() {
                    infinite_from = Some(t_c.clone());
                    break 'intervals;
                }
            }

            let (mut members, _) = allocate_at(weights, &forms, &t_c, have_unbounded);
            let (mut p, mut q_slope) = level_form(weights, &forms, &total_weight, &members);
            // forward stabilization: a player sitting exactly on the level
            // whose request grows faster than the level leaves immediately
            loop {
                let level_at = &p + &q_slope * &t_c;
                let leaving = members.iter().position(|&j| {
                    let (a, b) = forms.requests[j].as_ref().expect("members are bounded");
                    let value = a + b * &t_c;
                    value == &weights[j] * &level_at && b > &(&weights[j] * &q_slope)
                });
                match leaving {
                    None => break,
                    Some(pos) => {
                        members.remove(pos);
                        let (np, nq) = level_form(weights, &forms, &total_weight, &members);
                        debug_assert_eq!(
                            &np + &nq * &t_c,
                            level_at,
                            "level is continuous across boundary players"
                        );
                        p = np;
                        q_slope = nq;
                    }
                }
            }

            // earliest membership crossing or exhaustion after t_c
            let mut stop: Option<(Q, bool)> = None; // (time, is_exhaustion)
            for j in 0..n {
                let Some((a, b)) = forms.requests[j].as_ref() else {
                    continue;
                };
                let coef = b - &weights[j] * &q_slope;
                if coef.is_zero() {
                    continue;
                }
                let root = -(a - &weights[j] * &p) / coef;
                if root > t_c
                    && v.is_none_or(|v| &root <= v)
                    && stop.as_ref().is_none_or(|(r, _)| &root < r)
                {
                    stop = Some((root, false));
                }
            }
            if !have_unbounded && h1.is_negative() {
                let root = -&h0 / &h1;
                if root > t_c && v.is_none_or(|v| &root <= v) {
                    // exhaustion wins ties: the share is +inf there already
                    if stop.as_ref().is_none_or(|(r, _)| &root <= r) {
                        stop = Some((root, true));
                    }
                }
            }

            push_piece(&mut pieces, &t_c, &p, &q_slope);
            match stop {
                Some((r, true)) => {
                    infinite_from = Some(r);
                    break 'intervals;
                }
                Some((r, false)) => {
                    t_c = r;
                    if v == Some(&t_c) {
                        continue 'intervals;
                    }
                }
                None => continue 'intervals,
            }
        }
    }

    // exhausted from the very start: no finite pieces were emitted
    let finite = if pieces.is_empty() {
        debug_assert_eq!(infinite_from, Some(Q::zero()));
        Plf::zero()
    } else {
        assemble(pieces)
    };
    BuiltCurve {
        finite,
        infinite_from,
    }
}

/// Satisfied set and fair share of the pointwise problem at `t`, evaluated
/// through the right-limit forms. When the problem degenerates to all-zero
/// requests and zero resource (only at `t = 0`), the slopes decide.
fn allocate_at(weights: &[Q], forms: &Forms, t: &Q, have_unbounded: bool) -> (Vec<usize>, Ext) {
    let resource = forms.resource_at(t);
    let values: Vec<Option<Q>> = (0..weights.len()).map(|j| forms.request_at(j, t)).collect();
    let degenerate = !have_unbounded
        && resource.is_zero()
        && values
            .iter()
            .all(|x| x.as_ref().is_some_and(|v| v.is_zero()));
    let (requests, resource) = if degenerate {
        // share scales linearly near 0; allocate on slopes instead
        let slopes: Vec<Ext> = forms
            .requests
            .iter()
            .map(|r| match r {
                Some((_, b)) => Ext::Finite(b.clone()),
                None => Ext::PosInf,
            })
            .collect();
        (slopes, forms.service.1.clone())
    } else {
        let requests: Vec<Ext> = values
            .into_iter()
            .map(|x| match x {
                Some(v) => Ext::Finite(v),
                None => Ext::PosInf,
            })
            .collect();
        (requests, resource)
    };
    let problem = AllocationProblem::new(weights.to_vec(), requests, resource)
        .expect("validated inputs yield a valid pointwise problem");
    let result = maxmin::allocate(&problem);
    debug_assert!(
        result.fair_share.is_finite(),
        "share must be finite away from the exhausted region"
    );
    (result.satisfied.into_iter().collect(), result.fair_share)
}

/// Affine form of the fair-share level for a fixed satisfied set.
fn level_form(weights: &[Q], forms: &Forms, total_weight: &Q, members: &[usize]) -> (Q, Q) {
    let mut num0 = forms.service.0.clone();
    let mut num1 = forms.service.1.clone();
    let mut w = total_weight.clone();
    for &j in members {
        let (a, b) = forms.requests[j].as_ref().expect("members are bounded");
        num0 -= a;
        num1 -= b;
        w -= &weights[j];
    }
    debug_assert!(w.is_positive(), "the satisfied set is never everyone here");
    (num0 / &w, num1 / &w)
}

fn push_piece(pieces: &mut Vec<Piece>, start: &Q, intercept: &Q, slope: &Q) {
    if let Some(last) = pieces.last() {
        if &last.intercept == intercept && &last.slope == slope {
            return;
        }
        debug_assert_eq!(
            &last.intercept + &last.slope * start,
            intercept + slope * start,
            "pieces must chain continuously"
        );
    }
    pieces.push(Piece {
        start: start.clone(),
        intercept: intercept.clone(),
        slope: slope.clone(),
    });
}

fn assemble(pieces: Vec<Piece>) -> Plf {
    assert!(!pieces.is_empty(), "construction covers (0, inf)");
    debug_assert!(pieces[0].start.is_zero());
    debug_assert!(pieces[0].intercept.is_zero(), "curves vanish at the origin");
    let segs: Vec<(Q, Q, Q)> = pieces
        .into_iter()
        .map(|p| (p.start, Q::zero(), p.slope))
        .collect();
    Plf::new(segs).expect("pieces form a valid PLF")
}
