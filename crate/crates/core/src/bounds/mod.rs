//! Departure, backlog, and output-burstiness bounds on trajectories.
//!
//! For a feasible subset of unit-resource requests `(x_j)_{j in M}`, the
//! aggregate departures of `M` from a GPS scheduler dominate what dedicated
//! links with service `x_j C` would deliver:
//!
//! ```text
//! sum_{j in M} D_j(t)  >=  sum_{j in M} inf_{s<=t} { A_j(s) + x_j C(s,t) }
//! ```
//!
//! from which per-subset backlog and output bounds follow via
//! `B*_j(t) = sup_{r<=t} { A_j(r,t) - x_j C(r,t) }`. The checkers evaluate
//! the infima/suprema exactly over the breakpoint candidate sets (the
//! objectives are piecewise affine in the free variable) and report the
//! worst slack found; a check passes iff the slack is at least minus the
//! configured tolerance.

use crate::curves::ServiceCurve;
use crate::maxmin::{self, MaxminError};
use crate::plf::{Plf, PlfError};
use crate::rational::{q, Q};
use crate::simulator::Trajectory;
use num_traits::{Signed, Zero};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BoundError {
    #[error("requests are not feasible for the unit resource")]
    Infeasible,
    #[error("unknown flow index {0}")]
    UnknownFlow(usize),
    #[error("share must lie in [0, 1], got {0}")]
    ShareOutOfRange(Q),
    #[error("bound inapplicable: rho {rho} exceeds x * R = {cap}")]
    RateAboveShare { rho: Q, cap: Q },
    #[error(transparent)]
    Plf(#[from] PlfError),
    #[error(transparent)]
    Maxmin(#[from] MaxminError),
}

/// Where the worst slack of a check was observed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub time: Q,
    pub interval: Option<(Q, Q)>,
    pub flows: Vec<usize>,
    pub detail: String,
}

/// Pass/fail evidence for one bound on one trajectory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundReport {
    pub name: String,
    /// Number of elementary comparisons evaluated.
    pub checked: usize,
    pub worst_slack: Q,
    pub tolerance: Q,
    pub witness: Option<Witness>,
}

impl BoundReport {
    pub fn pass(&self) -> bool {
        self.worst_slack >= -self.tolerance.clone()
    }
}

/// `B*(t) = sup_{r <= t} { A(r,t) - x C(r,t) }`, exactly. The objective is
/// piecewise affine in `r`, so the supremum is attained at a breakpoint of
/// `A` or `C`, at `r = 0` or `r = t`, or as a right limit at a jump.
pub fn b_star(arrivals: &Plf, share: &Q, service: &Plf, t: &Q) -> Result<Q, BoundError> {
    if share.is_negative() || share > &q(1) {
        return Err(BoundError::ShareOutOfRange(share.clone()));
    }
    if t.is_negative() {
        return Err(PlfError::BadInterval {
            s: Q::zero(),
            t: t.clone(),
        }
        .into());
    }
    let base = arrivals.eval(t) - share * &service.eval(t);
    let mut candidates: Vec<Q> = vec![Q::zero(), t.clone()];
    for b in arrivals.breakpoints().chain(service.breakpoints()) {
        if b >= &Q::zero() && b <= t {
            candidates.push(b.clone());
        }
    }
    candidates.sort();
    candidates.dedup();
    let mut best: Option<Q> = None;
    for r in &candidates {
        let left = share * &service.eval(r) - arrivals.eval(r);
        best = Some(match best {
            None => left,
            Some(b) => b.max(left),
        });
        if r < t {
            let right = share * &service.eval_right(r) - arrivals.eval_right(r);
            best = Some(best.unwrap().max(right));
        }
    }
    let sup = base + best.expect("candidate set nonempty");
    debug_assert!(!sup.is_negative(), "r = t always contributes zero");
    Ok(sup)
}

/// Closed-form bound `B* <= sigma + rho L` for a token-bucket flow at a
/// latency-rate link, valid when `rho <= x R`.
pub fn b_star_affine_bound(
    sigma: &Q,
    rho: &Q,
    share: &Q,
    rate: &Q,
    latency: &Q,
) -> Result<Q, BoundError> {
    if share.is_negative() || share > &q(1) {
        return Err(BoundError::ShareOutOfRange(share.clone()));
    }
    let cap = share * rate;
    if rho > &cap {
        return Err(BoundError::RateAboveShare {
            rho: rho.clone(),
            cap,
        });
    }
    assert!(!sigma.is_negative() && !latency.is_negative());
    Ok(sigma + rho * latency)
}

fn validate_subset(traj: &Trajectory, shares: &BTreeMap<usize, Q>) -> Result<(), BoundError> {
    let n = traj.scenario.flows.len();
    for &j in shares.keys() {
        if j >= n {
            return Err(BoundError::UnknownFlow(j));
        }
    }
    let weights = traj.scenario.weights();
    if !maxmin::is_feasible(&weights, shares, &q(1))? {
        return Err(BoundError::Infeasible);
    }
    Ok(())
}

/// Aggregate departure lower bound for the feasible subset given by
/// `shares` (flow index -> unit-resource request), checked at time `t`.
/// No assumption is made on busy periods.
pub fn check_departure_bound(
    traj: &Trajectory,
    shares: &BTreeMap<usize, Q>,
    t: &Q,
    tolerance: &Q,
) -> Result<BoundReport, BoundError> {
    validate_subset(traj, shares)?;
    let service = &traj.scenario.service;
    let mut lhs = Q::zero();
    let mut rhs = Q::zero();
    for (&j, x) in shares {
        let arrivals = traj.scenario.flows[j]
            .arrivals
            .as_ref()
            .expect("scenario flows carry arrivals");
        lhs += traj.departures[j].eval(t);
        // inf_s {A(s) + x C(s,t)} = A(t) - B*(t)
        rhs += arrivals.eval(t) - b_star(arrivals, x, service, t)?;
    }
    let slack = lhs - rhs;
    let witness = slack.is_negative().then(|| Witness {
        time: t.clone(),
        interval: None,
        flows: shares.keys().copied().collect(),
        detail: "aggregate departures fell below the dedicated-link bound".into(),
    });
    Ok(BoundReport {
        name: "departure-bound".into(),
        checked: shares.len().max(1),
        witness,
        worst_slack: slack,
        tolerance: tolerance.clone(),
    })
}

/// Backlog bound `sum_M B_j(t) <= sum_M B*_j(t)` and output bound
/// `sum_M D_j(s,t) <= sum_M (B*_j(t) + x_j C(s,t))` for a feasible subset.
pub fn check_backlog_output_bounds(
    traj: &Trajectory,
    shares: &BTreeMap<usize, Q>,
    s: &Q,
    t: &Q,
    tolerance: &Q,
) -> Result<BoundReport, BoundError> {
    validate_subset(traj, shares)?;
    if s.is_negative() || s > t {
        return Err(PlfError::BadInterval {
            s: s.clone(),
            t: t.clone(),
        }
        .into());
    }
    let service = &traj.scenario.service;
    let c_range = service.range(s, t)?;
    let mut backlog_slack = Q::zero();
    let mut output_slack = Q::zero();
    for (&j, x) in shares {
        let arrivals = traj.scenario.flows[j]
            .arrivals
            .as_ref()
            .expect("scenario flows carry arrivals");
        let bstar = b_star(arrivals, x, service, t)?;
        backlog_slack += &bstar - &traj.backlogs[j].eval(t);
        output_slack += &bstar + x * &c_range - traj.departures[j].range(s, t)?;
    }
    let (worst, which) = if backlog_slack <= output_slack {
        (backlog_slack, "aggregate backlog bound")
    } else {
        (output_slack, "aggregate output bound")
    };
    Ok(BoundReport {
        name: "backlog-output-bounds".into(),
        checked: 2 * shares.len().max(1),
        witness: if worst.is_negative() {
            Some(Witness {
                time: t.clone(),
                interval: Some((s.clone(), t.clone())),
                flows: shares.keys().copied().collect(),
                detail: which.into(),
            })
        } else {
            None
        },
        worst_slack: worst,
        tolerance: tolerance.clone(),
    })
}

/// Verifies that `curve` is a strict service curve for flow `flow` on the
/// trajectory: on every maximal backlogged window and every subinterval
/// pair within it, `D(s,t) >= curve(t-s)`. Both sides are piecewise affine,
/// so the extremal slack over a window is attained on the breakpoint
/// candidate set, which [`Plf::inf_gap_window`] enumerates exactly.
pub fn check_strict_service(
    traj: &Trajectory,
    flow: usize,
    curve: &ServiceCurve,
    tolerance: &Q,
) -> Result<BoundReport, BoundError> {
    if flow >= traj.scenario.flows.len() {
        return Err(BoundError::UnknownFlow(flow));
    }
    let windows = traj.backlogs[flow].positive_windows(&traj.scenario.horizon);
    let mut worst: Option<(Q, (Q, Q))> = None;
    for (lo, hi) in &windows {
        let (slack, at) = traj.departures[flow].inf_gap_window(curve.plf(), lo, hi);
        if worst.as_ref().is_none_or(|(w, _)| &slack < w) {
            worst = Some((slack, at));
        }
    }
    let (worst_slack, at) = match worst {
        Some((w, at)) => (w, Some(at)),
        None => (Q::zero(), None),
    };
    Ok(BoundReport {
        name: format!("strict-service flow {flow}"),
        checked: windows.len(),
        witness: if worst_slack.is_negative() {
            at.map(|(s, t)| Witness {
                time: t.clone(),
                interval: Some((s, t)),
                flows: vec![flow],
                detail: "departures fell below the claimed strict service curve".into(),
            })
        } else {
            None
        },
        worst_slack,
        tolerance: tolerance.clone(),
    })
}

#[cfg(test)]
mod tests;
