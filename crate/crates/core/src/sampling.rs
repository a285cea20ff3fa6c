//! Seeded random instances for the verification suites.
//!
//! Everything draws from an explicit ChaCha generator so runs are
//! reproducible from a single seed. Values are small rationals (bounded
//! denominators) to keep exact arithmetic fast.

use crate::curves::{Envelope, FlowId, FlowSpec, ServiceCurve};
use crate::maxmin::AllocationProblem;
use crate::plf::Plf;
use crate::rational::{q, qr, Ext, Q};
use crate::simulator::Scenario;
use num_traits::{Signed, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::collections::BTreeMap;

pub type SeededRng = ChaCha12Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Uniform multiple of `1/den` in `[lo, hi]`.
pub fn rand_q(rng: &mut SeededRng, lo: i64, hi: i64, den: i64) -> Q {
    assert!(lo <= hi && den > 0);
    let k = rng.random_range((lo * den)..=(hi * den));
    qr(k, den)
}

/// Weight in `[0.1, 10]` on a 1/160 grid.
pub fn rand_weight(rng: &mut SeededRng) -> Q {
    qr(rng.random_range(16..=1600), 160)
}

/// Allocation problem with weights in `[0.1, 10]`, requests in
/// `[0, 10] ∪ {+inf}` (one in eight infinite when allowed), and a resource
/// in `[0, 20]`.
pub fn random_problem(rng: &mut SeededRng, n: usize, allow_infinite: bool) -> AllocationProblem {
    let weights: Vec<Q> = (0..n).map(|_| rand_weight(rng)).collect();
    let requests: Vec<Ext> = (0..n)
        .map(|_| {
            if allow_infinite && rng.random_range(0..8) == 0 {
                Ext::PosInf
            } else {
                Ext::Finite(rand_q(rng, 0, 10, 32))
            }
        })
        .collect();
    let resource = rand_q(rng, 0, 20, 32);
    AllocationProblem::new(weights, requests, resource).expect("generated values are valid")
}

/// Concave envelope as a lower envelope of up to `max_pieces` token buckets.
pub fn random_envelope(rng: &mut SeededRng, max_pieces: usize) -> Envelope {
    let pieces = rng.random_range(1..=max_pieces.max(1));
    let buckets: Vec<(Q, Q)> = (0..pieces)
        .map(|_| (rand_q(rng, 0, 8, 16), rand_q(rng, 0, 6, 16)))
        .collect();
    Envelope::from_token_buckets(&buckets).expect("nonnegative buckets")
}

/// Convex service curve as an upper envelope of up to `max_pieces`
/// latency-rate pieces, with a guaranteed positive long-run rate.
pub fn random_service_curve(rng: &mut SeededRng, max_pieces: usize) -> ServiceCurve {
    let pieces = rng.random_range(1..=max_pieces.max(1));
    let mut lr: Vec<(Q, Q)> = (0..pieces)
        .map(|_| (rand_q(rng, 0, 8, 16), rand_q(rng, 0, 4, 8)))
        .collect();
    if lr.iter().all(|(r, _)| r.is_zero()) {
        lr.push((rand_q(rng, 1, 8, 4), Q::zero()));
    }
    ServiceCurve::from_latency_rates(&lr).expect("nonnegative pieces")
}

/// Arrivals complying with `envelope`, built from compliance-preserving
/// transforms: intersect with extra token buckets (still a sub-envelope),
/// scale down, delay, and optionally stop. The result is non-greedy in
/// general but `A(s,t) <= E(t-s)` always holds.
pub fn random_compliant_arrivals(rng: &mut SeededRng, envelope: &Plf, horizon: &Q) -> Plf {
    let mut sub = envelope.clone();
    for _ in 0..rng.random_range(0..3) {
        let extra = Plf::token_bucket(rand_q(rng, 0, 6, 8), rand_q(rng, 0, 5, 8));
        sub = sub.min(&extra);
    }
    let scale = qr(rng.random_range(2..=8), 8);
    let mut arrivals = sub.scale(&scale);
    if rng.random_bool(0.5) {
        let delay = rand_q(rng, 0, 2, 8);
        arrivals = arrivals.shift_right(&delay);
    }
    if rng.random_bool(0.25) {
        let num = rng.random_range(1..8);
        let tau = horizon * qr(num, 8);
        if tau.is_positive() {
            arrivals = arrivals.stop_at(&tau);
        }
    }
    arrivals
}

/// Service process complying with `curve`: the curve plus a nondecreasing
/// surplus with random jumps and rate boosts (superadditivity of the convex
/// curve makes any such sum compliant).
pub fn random_service_process(rng: &mut SeededRng, curve: &Plf, horizon: &Q) -> Plf {
    if rng.random_bool(0.3) {
        return curve.clone(); // lazy
    }
    let mut starts: Vec<Q> = vec![Q::zero()];
    for _ in 0..rng.random_range(0..4) {
        let num = rng.random_range(1..16);
        starts.push(horizon * qr(num, 16));
    }
    starts.sort();
    starts.dedup();
    let segs: Vec<(Q, Q, Q)> = starts
        .iter()
        .map(|t| {
            let jump = if rng.random_bool(0.4) {
                rand_q(rng, 0, 2, 8)
            } else {
                Q::zero()
            };
            (t.clone(), jump, rand_q(rng, 0, 3, 8))
        })
        .collect();
    let surplus = Plf::new(segs).expect("sorted starts");
    curve.add(&surplus)
}

/// Flow set with random weights and envelopes.
pub fn random_flows(rng: &mut SeededRng, n: usize, max_env_pieces: usize) -> Vec<FlowSpec> {
    (0..n)
        .map(|j| {
            FlowSpec::new(
                FlowId::new(format!("f{j}")),
                rand_weight(rng),
                random_envelope(rng, max_env_pieces),
                None,
            )
            .expect("positive weight")
        })
        .collect()
}

/// Full random scenario with compliant, generally non-greedy arrivals and a
/// compliant, generally non-lazy service process. Unstable instances (total
/// long-run arrival rate above the service rate) arise naturally and are
/// kept.
pub fn random_scenario(
    rng: &mut SeededRng,
    n: usize,
    max_env_pieces: usize,
    max_curve_pieces: usize,
    horizon: Q,
) -> (Vec<FlowSpec>, ServiceCurve, Scenario) {
    let mut flows = random_flows(rng, n, max_env_pieces);
    let curve = random_service_curve(rng, max_curve_pieces);
    for f in &mut flows {
        let env = f.envelope.plf().expect("random envelopes are bounded");
        f.arrivals = Some(random_compliant_arrivals(rng, env, &horizon));
        debug_assert!(f.arrivals_comply(), "generator must stay compliant");
    }
    let process = random_service_process(rng, curve.plf(), &horizon);
    let scenario = Scenario::new(flows.clone(), process, horizon).expect("valid by construction");
    (flows, curve, scenario)
}

/// Random subset of `0..n` (possibly empty).
pub fn random_subset(rng: &mut SeededRng, n: usize) -> Vec<usize> {
    (0..n).filter(|_| rng.random_bool(0.5)).collect()
}

/// Burst-heavy scenario for discretization studies: every flow sends
/// periodic bursts (odd-denominator spacings, so drain instants do not
/// align with dyadic step grids) into a constant-rate link sized for
/// moderate load. Such inputs produce many backlog-drain events per run,
/// which is what a step-size convergence measurement needs.
pub fn convergence_scenario(rng: &mut SeededRng, n: usize, horizon: Q) -> Scenario {
    let spacings = [qr(5, 14), qr(3, 7), qr(4, 9), qr(5, 9), qr(4, 7), qr(7, 11)];
    let mut flows = Vec::with_capacity(n);
    let mut total_rate = Q::zero();
    for j in 0..n {
        let spacing = spacings[rng.random_range(0..spacings.len())].clone();
        let burst_num = rng.random_range(1..=6);
        let mut segs: Vec<(Q, Q, Q)> = Vec::new();
        let mut t = Q::zero();
        while t < horizon {
            let jump = qr(burst_num, 8) * qr(rng.random_range(2..=8), 8);
            let slope = qr(rng.random_range(0..=4), 8);
            segs.push((t.clone(), jump, slope));
            t += &spacing;
        }
        let arrivals = Plf::new(segs).expect("sorted bursts");
        // long-run rate: burst mass per spacing plus the drift
        total_rate += arrivals.eval(&horizon) / &horizon;
        flows.push(
            FlowSpec::new(
                FlowId::new(format!("f{j}")),
                rand_weight(rng),
                Envelope::Unbounded,
                Some(arrivals),
            )
            .expect("positive weight"),
        );
    }
    // slightly overloaded: the aggregate stays busy for the whole run while
    // lightly loaded flows still drain between bursts, so discretization
    // errors accumulate over many events instead of washing out
    let service_rate = total_rate * qr(rng.random_range(17..=19), 20);
    Scenario::new(flows, Plf::constant_rate(service_rate), horizon).expect("valid by construction")
}

/// Random feasible unit-resource requests on a random subset: draw raw
/// coefficients, then scale them under the feasibility boundary.
pub fn random_feasible_shares(
    rng: &mut SeededRng,
    weights: &[Q],
    members: &[usize],
) -> BTreeMap<usize, Q> {
    if members.is_empty() {
        return BTreeMap::new();
    }
    let coeffs: Vec<Q> = members.iter().map(|_| rand_q(rng, 0, 8, 8)).collect();
    let max_coeff = coeffs.iter().cloned().fold(Q::zero(), |a, b| a.max(b));
    if max_coeff.is_zero() {
        return members.iter().map(|&j| (j, Q::zero())).collect();
    }
    // with x_j = lambda * c_j * phi_j, feasibility for X = 1 holds up to
    // lambda* = 1 / (max c * sum_out phi + sum_M c_j phi_j)
    let outside: Q = weights
        .iter()
        .enumerate()
        .filter(|(j, _)| !members.contains(j))
        .map(|(_, w)| w)
        .sum();
    let inside: Q = members
        .iter()
        .zip(&coeffs)
        .map(|(&j, c)| c * &weights[j])
        .sum();
    let lambda_max = q(1) / (&max_coeff * &outside + &inside);
    let lambda = lambda_max * qr(rng.random_range(1..=8), 8);
    members
        .iter()
        .zip(&coeffs)
        .map(|(&j, c)| (j, &lambda * c * &weights[j]))
        .collect()
}
