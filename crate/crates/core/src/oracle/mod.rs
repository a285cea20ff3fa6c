//! Independent slow references for cross-validation.
//!
//! The fast paths (water-filling, exact curve construction, event-driven
//! simulation) are checked against literal implementations of their
//! defining formulas: subset enumeration for fair shares and service
//! curves, and a fixed-step explicit integration for trajectories. The
//! oracles deliberately share no code with the implementations they check.

use crate::curves::{CurveError, Envelope, FlowSpec, ServiceCurve};
use crate::maxmin::AllocationProblem;
use crate::plf::PlPath;
use crate::rational::{to_f64, Ext, Q};
use crate::simulator::{Scenario, Trajectory};
use num_traits::{Signed, Zero};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("instance has {n} players, enumeration is capped at {cap}")]
    TooManyPlayers { n: usize, cap: usize },
    #[error("euler step must be positive")]
    NonpositiveStep,
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Limits for the slow references.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleConfig {
    /// Largest player/flow count enumerated (hard limit 20).
    pub max_enum: usize,
    /// Fixed step for [`simulate_euler`].
    pub euler_dt: Q,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            max_enum: 12,
            euler_dt: crate::rational::qr(1, 64),
        }
    }
}

impl OracleConfig {
    fn check_size(&self, n: usize) -> Result<(), OracleError> {
        let cap = self.max_enum.min(20);
        if n > cap {
            return Err(OracleError::TooManyPlayers { n, cap });
        }
        Ok(())
    }
}

/// Walks all subsets of `eligible` in Gray-code order, maintaining the
/// running numerator `X - sum_M x_j` and denominator `sum_{not M} phi_j`,
/// and keeps the best fraction (compared by cross-multiplication; the
/// denominator is positive whenever it is nonzero). A zero denominator is
/// the full player set: `+inf` when the numerator is nonnegative, `-inf`
/// (never the maximum) otherwise.
fn enumerate_best_fraction(resource: &Q, total_weight: &Q, values: &[Q], weights: &[Q]) -> Ext {
    let k = values.len();
    let mut num = resource.clone();
    let mut den = total_weight.clone();
    let mut in_set = vec![false; k];
    let mut best = (num.clone(), den.clone()); // M = empty
    let mut reached_inf = den.is_zero() && !num.is_negative();
    for step in 1u64..(1u64 << k) {
        let bit = step.trailing_zeros() as usize;
        if in_set[bit] {
            num += &values[bit];
            den += &weights[bit];
        } else {
            num -= &values[bit];
            den -= &weights[bit];
        }
        in_set[bit] = !in_set[bit];
        if den.is_zero() {
            if !num.is_negative() {
                reached_inf = true;
            }
        } else if &num * &best.1 > &best.0 * &den {
            best = (num.clone(), den.clone());
        }
    }
    if reached_inf {
        Ext::PosInf
    } else {
        Ext::Finite(best.0 / best.1)
    }
}

/// Literal subset maximization of the fair share: over every `M`,
/// `(X - sum_M x_j) / sum_{not M} phi_j`, the full set contributing `+inf`
/// or `-inf` by the sign of its numerator. Subsets containing an infinite
/// request evaluate to `-inf` and can never win, so only finite requests
/// are enumerated.
pub fn fair_share_bruteforce(
    p: &AllocationProblem,
    config: &OracleConfig,
) -> Result<Ext, OracleError> {
    config.check_size(p.len())?;
    if p.is_empty() {
        // the only subset is M = N = empty; numerator X >= 0
        return Ok(Ext::PosInf);
    }
    let mut values = Vec::new();
    let mut weights = Vec::new();
    for j in 0..p.len() {
        if let Ext::Finite(x) = &p.requests()[j] {
            values.push(x.clone());
            weights.push(p.weights()[j].clone());
        }
    }
    let total_weight: Q = p.weights().iter().sum();
    Ok(enumerate_best_fraction(
        p.resource(),
        &total_weight,
        &values,
        &weights,
    ))
}

/// Literal enumeration of the leftover service curve value at `t`:
/// maximum over subsets avoiding the flow of
/// `phi_i (C(t) - sum_M E_j(t)) / sum_{not M} phi_j`.
pub fn leftover_bruteforce(
    flows: &[FlowSpec],
    service: &ServiceCurve,
    flow: &crate::curves::FlowId,
    t: &Q,
    config: &OracleConfig,
) -> Result<Q, OracleError> {
    config.check_size(flows.len())?;
    let i = flows
        .iter()
        .position(|f| &f.id == flow)
        .ok_or(CurveError::UnknownFlow(flow.clone()))?;
    let mut values = Vec::new();
    let mut weights = Vec::new();
    for (j, f) in flows.iter().enumerate() {
        if j == i {
            continue;
        }
        if let Some(env) = f.envelope.plf() {
            values.push(env.eval(t));
            weights.push(f.weight.clone());
        }
    }
    let total_weight: Q = flows.iter().map(|f| &f.weight).sum();
    let best = enumerate_best_fraction(&service.eval(t), &total_weight, &values, &weights);
    // the denominator always contains phi_i, so the maximum is finite
    let best = best.expect_finite("subsets avoid the flow itself").clone();
    Ok(best * &flows[i].weight)
}

/// Literal enumeration of the universal service curve value at `t`,
/// including the full-set sign convention.
pub fn universal_bruteforce(
    flows: &[FlowSpec],
    service: &ServiceCurve,
    t: &Q,
    config: &OracleConfig,
) -> Result<Ext, OracleError> {
    config.check_size(flows.len())?;
    if flows.is_empty() {
        return Ok(Ext::PosInf);
    }
    let mut values = Vec::new();
    let mut weights = Vec::new();
    for f in flows {
        if let Some(env) = f.envelope.plf() {
            values.push(env.eval(t));
            weights.push(f.weight.clone());
        }
    }
    let total_weight: Q = flows.iter().map(|f| &f.weight).sum();
    Ok(enumerate_best_fraction(
        &service.eval(t),
        &total_weight,
        &values,
        &weights,
    ))
}

/// One backlog sample of the approximate trajectory. Sample instants are
/// exact rationals (step boundaries never drift), only the state is
/// floating point. `post_jump` marks the instant just after an input jump
/// was consumed (the right limit).
#[derive(Debug, Clone)]
pub struct EulerSample {
    pub time: Q,
    pub post_jump: bool,
    pub backlogs: Vec<f64>,
}

/// Fixed-step approximate trajectory.
#[derive(Debug, Clone)]
pub struct EulerTrajectory {
    pub samples: Vec<EulerSample>,
    pub departures_end: Vec<f64>,
}

/// Explicit fixed-step integration of the backlog dynamics in floating
/// point. Steps never cross an input breakpoint (jumps are consumed by an
/// instantaneous allocation, as in the exact simulator), but the departure
/// rates chosen at the start of a step are kept frozen across it, so a flow
/// draining mid-step briefly keeps capacity that the exact dynamics hand to
/// its competitors. That misallocation is the first-order discretization
/// error; it shrinks linearly with the step.
pub fn simulate_euler(scenario: &Scenario, dt: &Q) -> Result<EulerTrajectory, OracleError> {
    if !dt.is_positive() {
        return Err(OracleError::NonpositiveStep);
    }
    let n = scenario.flows.len();
    let weights: Vec<f64> = scenario.weights().iter().map(to_f64).collect();
    let grid = scenario.grid();
    let mut backlog = vec![0.0f64; n];
    let mut departed = vec![0.0f64; n];
    let mut samples = Vec::new();
    samples.push(EulerSample {
        time: Q::zero(),
        post_jump: false,
        backlogs: backlog.clone(),
    });

    for (l, t_l) in grid.iter().enumerate() {
        let Some(t_next) = grid.get(l + 1) else {
            break;
        };
        // consume jumps exactly at the breakpoint
        let requests: Vec<f64> = (0..n)
            .map(|j| {
                backlog[j]
                    + to_f64(
                        &scenario.flows[j]
                            .arrivals
                            .as_ref()
                            .expect("validated")
                            .jump_at(t_l),
                    )
            })
            .collect();
        let resource = to_f64(&scenario.service.jump_at(t_l));
        let served = waterfill_f64(&requests, &weights, resource);
        for j in 0..n {
            departed[j] += served[j];
            backlog[j] = (requests[j] - served[j]).max(0.0);
        }
        samples.push(EulerSample {
            time: t_l.clone(),
            post_jump: true,
            backlogs: backlog.clone(),
        });

        let arrival_rates: Vec<f64> = (0..n)
            .map(|j| {
                to_f64(
                    &scenario.flows[j]
                        .arrivals
                        .as_ref()
                        .expect("validated")
                        .left_slope(t_next),
                )
            })
            .collect();
        let service_rate = to_f64(&scenario.service.left_slope(t_next));

        // step boundaries stay exact rationals; only the state is float
        let mut t_cur = t_l.clone();
        while &t_cur < t_next {
            let t_new = (&t_cur + dt).min(t_next.clone());
            let step = to_f64(&(&t_new - &t_cur));
            // rates frozen at the step start
            let rate_requests: Vec<f64> = (0..n)
                .map(|j| {
                    if backlog[j] > 0.0 {
                        f64::INFINITY
                    } else {
                        arrival_rates[j]
                    }
                })
                .collect();
            let rates = waterfill_f64(&rate_requests, &weights, service_rate);
            for j in 0..n {
                let drained = backlog[j] + (arrival_rates[j] - rates[j]) * step;
                let new_backlog = drained.max(0.0);
                departed[j] += backlog[j] + arrival_rates[j] * step - new_backlog;
                backlog[j] = new_backlog;
            }
            t_cur = t_new;
            samples.push(EulerSample {
                time: t_cur.clone(),
                post_jump: false,
                backlogs: backlog.clone(),
            });
        }
    }
    Ok(EulerTrajectory {
        samples,
        departures_end: departed,
    })
}

/// Max-min share in floating point; requests may be infinite.
fn waterfill_f64(requests: &[f64], weights: &[f64], resource: f64) -> Vec<f64> {
    let n = requests.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        (requests[a] / weights[a])
            .partial_cmp(&(requests[b] / weights[b]))
            .expect("rates are not NaN")
    });
    let mut remaining = resource;
    let mut weight_left: f64 = weights.iter().sum();
    for &j in &order {
        if requests[j].is_finite() && requests[j] * weight_left <= weights[j] * remaining {
            remaining -= requests[j];
            weight_left -= weights[j];
        } else {
            break;
        }
    }
    let level = if weight_left > 0.0 {
        remaining / weight_left
    } else {
        f64::INFINITY
    };
    (0..n)
        .map(|j| requests[j].min(weights[j] * level))
        .collect()
}

/// Sup-norm backlog gap between the exact and the approximate trajectory,
/// evaluated at the approximate sample instants (jump samples compare
/// against the exact right limit).
pub fn backlog_gap(exact: &Trajectory, euler: &EulerTrajectory) -> f64 {
    let mut worst: f64 = 0.0;
    for sample in &euler.samples {
        let total: f64 = (0..sample.backlogs.len())
            .map(|j| {
                let reference = exact_value(&exact.backlogs[j], &sample.time, sample.post_jump);
                (reference - sample.backlogs[j]).abs()
            })
            .sum();
        worst = worst.max(total);
    }
    worst
}

fn exact_value(path: &PlPath, t: &Q, post_jump: bool) -> f64 {
    if post_jump {
        to_f64(&path.eval_right(t))
    } else {
        to_f64(&path.eval(t))
    }
}

/// Convenience: greedy/lazy inputs for oracle cross-checks.
pub fn greedy_scenario(
    flows: &[FlowSpec],
    curve: &ServiceCurve,
    horizon: Q,
) -> Result<Scenario, crate::simulator::SimError> {
    Scenario::greedy_lazy(flows, curve, horizon)
}

/// Whether any envelope in the set is unbounded (such sets have no greedy
/// scenario).
pub fn any_unbounded(flows: &[FlowSpec]) -> bool {
    flows
        .iter()
        .any(|f| matches!(f.envelope, Envelope::Unbounded))
}
