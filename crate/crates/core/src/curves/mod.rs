//! Envelopes, service curves, and the per-flow leftover service curve.
//!
//! The central operation is [`leftover`]: for a flow `i` at a GPS scheduler
//! whose service process is bounded below by a convex curve and whose
//! competitors are bounded by concave envelopes, the best-possible strict
//! service curve for `i` is
//!
//! ```text
//! S_i(t) = max over M ⊆ N\{i} of  phi_i * (C(t) - sum_{j in M} E_j(t))
//!                                 / sum_{j not in M} phi_j
//! ```
//!
//! Pointwise this is a weighted max-min fair share with requests `E_j(t)`
//! and resource `C(t)`, which is how it is computed; the closed PLF form is
//! assembled exactly by tracking where the satisfied set changes (see
//! [`construct`]). The aggregate [`universal`] curve is the same maximum
//! over all subsets of the full flow set and may become infinite once the
//! envelopes exhaust the service.

mod construct;

use crate::maxmin::{self, AllocationProblem, MaxminError};
use crate::plf::{Plf, PlfError, Shape};
use crate::rational::{Ext, Q};
use num_traits::{Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CurveError {
    #[error("envelope must be concave with a jump only at 0+ (shape was {0:?})")]
    NotConcave(Shape),
    #[error("service curve must be convex with no jumps (shape was {0:?})")]
    NotConvex(Shape),
    #[error("flow weight must be positive, got {0}")]
    NonpositiveWeight(Q),
    #[error("unknown flow id `{0}`")]
    UnknownFlow(FlowId),
    #[error("token-bucket burst must be nonnegative, got {0}")]
    NegativeBurst(Q),
    #[error("rate must be nonnegative, got {0}")]
    NegativeRate(Q),
    #[error("latency must be nonnegative, got {0}")]
    NegativeLatency(Q),
    #[error("operation needs t > 0, got {0}")]
    NonpositiveTime(Q),
    #[error("service curve has zero left-slope at {0}; tangent scenario is degenerate")]
    ZeroServiceSlope(Q),
    #[error("greedy scenario undefined: flow `{0}` has an unbounded envelope")]
    UnboundedEnvelope(FlowId),
    #[error(transparent)]
    Plf(#[from] PlfError),
    #[error(transparent)]
    Maxmin(#[from] MaxminError),
}

/// Flow identifier (scenario files use human-readable names).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowId(pub String);

impl FlowId {
    pub fn new(s: impl Into<String>) -> Self {
        FlowId(s.into())
    }
}

impl fmt::Display for FlowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for FlowId {
    fn from(s: &str) -> Self {
        FlowId(s.to_string())
    }
}

impl From<String> for FlowId {
    fn from(s: String) -> Self {
        FlowId(s)
    }
}

/// Concave arrival envelope, or the conservative `+inf` marker for flows
/// without rate information.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Envelope {
    Bounded(Plf),
    Unbounded,
}

impl Envelope {
    /// Validates concavity (jump allowed only at `0+`).
    pub fn bounded(plf: Plf) -> Result<Envelope, CurveError> {
        let shape = plf.shape();
        if !shape.is_concave() {
            return Err(CurveError::NotConcave(shape));
        }
        Ok(Envelope::Bounded(plf))
    }

    pub fn unbounded() -> Envelope {
        Envelope::Unbounded
    }

    /// Lower envelope (pointwise minimum) of token buckets
    /// `sigma_k + rho_k t`; the natural generator of concave envelopes.
    pub fn from_token_buckets(pieces: &[(Q, Q)]) -> Result<Envelope, CurveError> {
        assert!(!pieces.is_empty(), "need at least one token bucket");
        for (sigma, rho) in pieces {
            if sigma.is_negative() {
                return Err(CurveError::NegativeBurst(sigma.clone()));
            }
            if rho.is_negative() {
                return Err(CurveError::NegativeRate(rho.clone()));
            }
        }
        // keep the lower hull: sort by burst, drop dominated lines
        let mut lines: Vec<(Q, Q)> = pieces.to_vec();
        lines.sort();
        lines.dedup();
        let mut hull: Vec<(Q, Q)> = Vec::new();
        for (sigma, rho) in lines {
            if hull.iter().any(|(s0, r0)| s0 <= &sigma && r0 <= &rho) {
                continue; // dominated everywhere
            }
            while let Some((s0, r0)) = hull.last() {
                if s0 >= &sigma && r0 >= &rho {
                    hull.pop(); // previous line dominated
                } else {
                    break;
                }
            }
            hull.push((sigma, rho));
        }
        // bursts ascend, rates descend; insert crossings, pruning lines that
        // never become minimal
        let mut starts: Vec<(Q, Q, Q)> = Vec::new(); // (start, sigma, rho)
        for (sigma, rho) in hull {
            loop {
                match starts.last() {
                    None => {
                        starts.push((Q::zero(), sigma, rho));
                        break;
                    }
                    Some((t0, s0, r0)) => {
                        // crossing with the currently last active line
                        let cross = (&sigma - s0) / (r0 - &rho);
                        if &cross <= t0 {
                            starts.pop();
                        } else {
                            starts.push((cross, sigma, rho));
                            break;
                        }
                    }
                }
            }
        }
        let segs: Vec<(Q, Q, Q)> = starts
            .iter()
            .map(|(t, sigma, rho)| {
                let jump = if t.is_zero() {
                    sigma.clone()
                } else {
                    Q::zero()
                };
                (t.clone(), jump, rho.clone())
            })
            .collect();
        Envelope::bounded(Plf::new(segs)?)
    }

    pub fn plf(&self) -> Option<&Plf> {
        match self {
            Envelope::Bounded(p) => Some(p),
            Envelope::Unbounded => None,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, Envelope::Unbounded)
    }

    /// Envelope value as an extended real.
    pub fn eval(&self, t: &Q) -> Ext {
        match self {
            Envelope::Bounded(p) => Ext::Finite(p.eval(t)),
            Envelope::Unbounded => {
                if t.is_positive() {
                    Ext::PosInf
                } else {
                    Ext::zero()
                }
            }
        }
    }
}

/// Convex, nonnegative, nondecreasing strict service curve without jumps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceCurve {
    plf: Plf,
}

impl ServiceCurve {
    pub fn new(plf: Plf) -> Result<ServiceCurve, CurveError> {
        let shape = plf.shape();
        if !shape.is_convex() {
            return Err(CurveError::NotConvex(shape));
        }
        Ok(ServiceCurve { plf })
    }

    /// Upper envelope (pointwise maximum) of latency-rate curves
    /// `R_k (t - L_k)+`; the natural generator of convex service curves.
    pub fn from_latency_rates(pieces: &[(Q, Q)]) -> Result<ServiceCurve, CurveError> {
        assert!(!pieces.is_empty(), "need at least one latency-rate piece");
        let mut curve = Plf::zero();
        for (rate, latency) in pieces {
            if rate.is_negative() {
                return Err(CurveError::NegativeRate(rate.clone()));
            }
            if latency.is_negative() {
                return Err(CurveError::NegativeLatency(latency.clone()));
            }
            curve = curve.max(&Plf::latency_rate(rate.clone(), latency.clone()));
        }
        ServiceCurve::new(curve)
    }

    pub fn constant_rate(rate: Q) -> ServiceCurve {
        ServiceCurve::new(Plf::constant_rate(rate)).expect("a line is convex")
    }

    pub fn plf(&self) -> &Plf {
        &self.plf
    }

    pub fn eval(&self, t: &Q) -> Q {
        self.plf.eval(t)
    }
}

/// A flow at the scheduler: id, positive weight, envelope, and (for
/// simulation) an optional arrival process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowSpec {
    pub id: FlowId,
    pub weight: Q,
    pub envelope: Envelope,
    pub arrivals: Option<Plf>,
}

impl FlowSpec {
    pub fn new(
        id: impl Into<FlowId>,
        weight: Q,
        envelope: Envelope,
        arrivals: Option<Plf>,
    ) -> Result<FlowSpec, CurveError> {
        if !weight.is_positive() {
            return Err(CurveError::NonpositiveWeight(weight));
        }
        Ok(FlowSpec {
            id: id.into(),
            weight,
            envelope,
            arrivals,
        })
    }

    /// Whether the declared arrivals comply with the declared envelope
    /// (vacuously true when either is absent/unbounded).
    pub fn arrivals_comply(&self) -> bool {
        match (&self.arrivals, &self.envelope) {
            (Some(a), Envelope::Bounded(e)) => Plf::complies_envelope(a, e),
            _ => true,
        }
    }
}

fn flow_index(flows: &[FlowSpec], id: &FlowId) -> Result<usize, CurveError> {
    flows
        .iter()
        .position(|f| &f.id == id)
        .ok_or_else(|| CurveError::UnknownFlow(id.clone()))
}

fn weights_of(flows: &[FlowSpec]) -> Vec<Q> {
    flows.iter().map(|f| f.weight.clone()).collect()
}

/// The aggregate fair-share curve; `+inf` from the exhaustion time on when
/// the sum of envelopes falls below the service curve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniversalCurve {
    finite: Plf,
    infinite_from: Option<Q>,
}

impl UniversalCurve {
    pub fn eval(&self, t: &Q) -> Ext {
        if !t.is_positive() {
            return Ext::zero();
        }
        match &self.infinite_from {
            Some(t0) if t >= t0 => Ext::PosInf,
            _ => Ext::Finite(self.finite.eval(t)),
        }
    }

    /// The finite part, valid before [`Self::infinite_from`].
    pub fn finite_part(&self) -> &Plf {
        &self.finite
    }

    /// Earliest time at which the curve is `+inf`, if any.
    pub fn infinite_from(&self) -> Option<&Q> {
        self.infinite_from.as_ref()
    }
}

/// The leftover (per-flow strict) service curve for `flow`, as an exact
/// convex PLF. Pointwise it is the per-player fair share with requests
/// `E_j(t)` (`j != flow`; unbounded as `+inf`) and resource `C(t)`; no
/// hypothesis is placed on the arrivals of `flow` itself, whose envelope is
/// ignored.
pub fn leftover(
    flows: &[FlowSpec],
    flow: &FlowId,
    service: &ServiceCurve,
) -> Result<ServiceCurve, CurveError> {
    let i = flow_index(flows, flow)?;
    let reqs: Vec<construct::Request> = flows
        .iter()
        .enumerate()
        .map(|(j, f)| {
            if j == i {
                construct::Request::Unbounded
            } else {
                match &f.envelope {
                    Envelope::Bounded(p) => construct::Request::Bounded(p.clone()),
                    Envelope::Unbounded => construct::Request::Unbounded,
                }
            }
        })
        .collect();
    let built = construct::fair_share_curve(&weights_of(flows), &reqs, service.plf());
    debug_assert!(
        built.infinite_from.is_none(),
        "a masked flow keeps the share finite"
    );
    let scaled = built.finite.scale(&flows[i].weight);
    ServiceCurve::new(scaled.canonical())
}

/// The universal service curve over the whole flow set.
pub fn universal(flows: &[FlowSpec], service: &ServiceCurve) -> Result<UniversalCurve, CurveError> {
    let reqs: Vec<construct::Request> = flows
        .iter()
        .map(|f| match &f.envelope {
            Envelope::Bounded(p) => construct::Request::Bounded(p.clone()),
            Envelope::Unbounded => construct::Request::Unbounded,
        })
        .collect();
    let built = construct::fair_share_curve(&weights_of(flows), &reqs, service.plf());
    Ok(UniversalCurve {
        finite: built.finite.canonical(),
        infinite_from: built.infinite_from,
    })
}

/// Pointwise allocation problem at time `t` with flow `mask` (when given)
/// treated as requesting `+inf`.
fn pointwise_problem(
    flows: &[FlowSpec],
    service: &ServiceCurve,
    t: &Q,
    mask: Option<usize>,
) -> Result<AllocationProblem, CurveError> {
    let requests: Vec<Ext> = flows
        .iter()
        .enumerate()
        .map(|(j, f)| {
            if Some(j) == mask {
                Ext::PosInf
            } else {
                f.envelope.eval(t)
            }
        })
        .collect();
    Ok(AllocationProblem::new(
        weights_of(flows),
        requests,
        service.eval(t),
    )?)
}

/// Leftover curve value at a single time, straight from the allocation
/// problem (used to cross-check the PLF construction).
pub fn leftover_at(
    flows: &[FlowSpec],
    flow: &FlowId,
    service: &ServiceCurve,
    t: &Q,
) -> Result<Q, CurveError> {
    let i = flow_index(flows, flow)?;
    if !t.is_positive() {
        return Ok(Q::zero());
    }
    let p = pointwise_problem(flows, service, t, None)?;
    Ok(maxmin::per_player_share(&p, i)?)
}

/// Universal curve value at a single time.
pub fn universal_at(flows: &[FlowSpec], service: &ServiceCurve, t: &Q) -> Result<Ext, CurveError> {
    if !t.is_positive() {
        return Ok(Ext::zero());
    }
    let p = pointwise_problem(flows, service, t, None)?;
    Ok(maxmin::fair_share(&p))
}

/// The maximizing subset at time `t` for flow `flow`: the satisfied set of
/// the pointwise allocation with `E_flow` treated as `+inf`. Evaluating the
/// leftover maximum at this subset attains `S_flow(t)`.
pub fn maximizer_set(
    flows: &[FlowSpec],
    service: &ServiceCurve,
    t: &Q,
    flow: &FlowId,
) -> Result<BTreeSet<FlowId>, CurveError> {
    let i = flow_index(flows, flow)?;
    if !t.is_positive() {
        return Err(CurveError::NonpositiveTime(t.clone()));
    }
    let p = pointwise_problem(flows, service, t, Some(i))?;
    let result = maxmin::allocate(&p);
    Ok(result
        .satisfied
        .into_iter()
        .map(|j| flows[j].id.clone())
        .collect())
}

/// Left-slope requests `x_j = E_j'(tau-) / C'(tau-)` over the maximizer set,
/// which form a feasible subset for the unit resource.
pub fn slope_requests(
    flows: &[FlowSpec],
    service: &ServiceCurve,
    tau: &Q,
    flow: &FlowId,
) -> Result<BTreeMap<FlowId, Q>, CurveError> {
    if !tau.is_positive() {
        return Err(CurveError::NonpositiveTime(tau.clone()));
    }
    let c_slope = service.plf().left_slope(tau);
    if c_slope.is_zero() {
        return Err(CurveError::ZeroServiceSlope(tau.clone()));
    }
    let members = maximizer_set(flows, service, tau, flow)?;
    let mut out = BTreeMap::new();
    for id in members {
        let j = flow_index(flows, &id)?;
        let env = flows[j]
            .envelope
            .plf()
            .expect("maximizer set only contains bounded envelopes");
        out.insert(id, env.left_slope(tau) / &c_slope);
    }
    Ok(out)
}

/// Replaces every bounded envelope by its tangent token bucket at `tau` and
/// the service curve by its tangent latency-rate curve. The leftover curve
/// of the tangent scenario agrees with the original at `tau`.
pub fn tangent_scenario(
    flows: &[FlowSpec],
    service: &ServiceCurve,
    tau: &Q,
) -> Result<(Vec<FlowSpec>, ServiceCurve), CurveError> {
    if !tau.is_positive() {
        return Err(CurveError::NonpositiveTime(tau.clone()));
    }
    let rate = service.plf().left_slope(tau);
    if rate.is_zero() {
        return Err(CurveError::ZeroServiceSlope(tau.clone()));
    }
    let latency = tau - service.eval(tau) / &rate;
    debug_assert!(!latency.is_negative(), "convexity keeps the latency >= 0");
    let tangent_service = ServiceCurve::new(Plf::latency_rate(rate, latency))?;
    let mut tangent_flows = Vec::with_capacity(flows.len());
    for f in flows {
        let envelope = match &f.envelope {
            Envelope::Unbounded => Envelope::Unbounded,
            Envelope::Bounded(p) => {
                let piece = p.tangent(tau)?;
                debug_assert!(
                    !piece.intercept.is_negative(),
                    "concavity keeps the burst >= 0"
                );
                Envelope::bounded(Plf::token_bucket(piece.intercept, piece.slope))?
            }
        };
        tangent_flows.push(FlowSpec {
            id: f.id.clone(),
            weight: f.weight.clone(),
            envelope,
            arrivals: None,
        });
    }
    Ok((tangent_flows, tangent_service))
}

/// Closed-form departures of the greedy/lazy scenario (`A_j = E_j`,
/// `C = curve`): `D_j = min(E_j, S_j)` exactly, per flow in input order.
pub fn greedy_lazy(flows: &[FlowSpec], service: &ServiceCurve) -> Result<Vec<Plf>, CurveError> {
    for f in flows {
        if f.envelope.is_unbounded() {
            return Err(CurveError::UnboundedEnvelope(f.id.clone()));
        }
    }
    let mut out = Vec::with_capacity(flows.len());
    for f in flows {
        let s_i = leftover(flows, &f.id, service)?;
        let env = f.envelope.plf().expect("checked bounded");
        out.push(env.min(s_i.plf()));
    }
    Ok(out)
}
