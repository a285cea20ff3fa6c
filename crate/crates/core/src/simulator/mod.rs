//! Exact event-driven GPS fluid simulation.
//!
//! Inputs are piecewise-linear arrival processes and a piecewise-linear
//! service process. Between input breakpoints all rates are constant, so
//! the backlog evolves piecewise linearly; the only internal events are
//! instants where a backlogged flow empties, of which there are at most one
//! per flow between consecutive breakpoints. Jumps in arrivals and service
//! at a breakpoint are consumed by one instantaneous max-min allocation
//! with requests `B_j + dA_j` and resource `dC`; within a segment the
//! departure rates are the max-min allocation of the service rate with
//! backlogged flows requesting `+inf` and idle flows their arrival rate.

use crate::bounds::{BoundReport, Witness};
use crate::curves::{CurveError, FlowId, FlowSpec, ServiceCurve};
use crate::maxmin::{self, AllocationProblem};
use crate::plf::{PlPath, Plf};
use crate::rational::{Ext, Q};
use num_traits::{Signed, Zero};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("horizon must be positive, got {0}")]
    NonpositiveHorizon(Q),
    #[error("flow `{0}` has no arrival process")]
    MissingArrivals(FlowId),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// A simulation input: flows with arrival processes, a service process, and
/// a finite horizon. Trailing backlog at the horizon is reported, not
/// drained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub flows: Vec<FlowSpec>,
    pub service: Plf,
    pub horizon: Q,
}

impl Scenario {
    pub fn new(flows: Vec<FlowSpec>, service: Plf, horizon: Q) -> Result<Scenario, SimError> {
        if !horizon.is_positive() {
            return Err(SimError::NonpositiveHorizon(horizon));
        }
        for f in &flows {
            if f.arrivals.is_none() {
                return Err(SimError::MissingArrivals(f.id.clone()));
            }
        }
        Ok(Scenario {
            flows,
            service,
            horizon,
        })
    }

    /// The saturating scenario: every flow greedy (`A_j = E_j`) and the
    /// service element lazy (`C` equal to its curve).
    pub fn greedy_lazy(
        flows: &[FlowSpec],
        curve: &ServiceCurve,
        horizon: Q,
    ) -> Result<Scenario, SimError> {
        let mut greedy = Vec::with_capacity(flows.len());
        for f in flows {
            let env = f
                .envelope
                .plf()
                .ok_or_else(|| CurveError::UnboundedEnvelope(f.id.clone()))?;
            greedy.push(FlowSpec {
                id: f.id.clone(),
                weight: f.weight.clone(),
                envelope: f.envelope.clone(),
                arrivals: Some(env.clone()),
            });
        }
        Scenario::new(greedy, curve.plf().clone(), horizon)
    }

    pub fn weights(&self) -> Vec<Q> {
        self.flows.iter().map(|f| f.weight.clone()).collect()
    }

    pub fn flow_index(&self, id: &FlowId) -> Option<usize> {
        self.flows.iter().position(|f| &f.id == id)
    }

    fn arrivals(&self, j: usize) -> &Plf {
        self.flows[j].arrivals.as_ref().expect("validated")
    }

    /// Input breakpoints within `[0, horizon)`, starting with 0, followed
    /// by the horizon itself.
    pub fn grid(&self) -> Vec<Q> {
        let mut grid: Vec<Q> = vec![Q::zero()];
        for f in &self.flows {
            for b in f.arrivals.as_ref().expect("validated").breakpoints() {
                if b.is_positive() && b < &self.horizon {
                    grid.push(b.clone());
                }
            }
        }
        for b in self.service.breakpoints() {
            if b.is_positive() && b < &self.horizon {
                grid.push(b.clone());
            }
        }
        grid.push(self.horizon.clone());
        grid.sort();
        grid.dedup();
        grid
    }
}

/// Change of the non-backlogged set: `idle` holds on the open interval
/// just after `time`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub time: Q,
    pub idle: BTreeSet<usize>,
}

/// Simulation output: per-flow departures and backlogs plus the event log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub scenario: Scenario,
    pub departures: Vec<Plf>,
    pub backlogs: Vec<PlPath>,
    pub events: Vec<Event>,
}

impl Trajectory {
    /// Number of events strictly between consecutive input breakpoints,
    /// per input segment. Each count is at most the number of flows.
    pub fn internal_event_counts(&self) -> Vec<usize> {
        let grid = self.scenario.grid();
        grid.windows(2)
            .map(|w| {
                self.events
                    .iter()
                    .filter(|e| e.time > w[0] && e.time < w[1])
                    .count()
            })
            .collect()
    }
}

/// Instantaneous allocation outcome at a jump.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JumpOutcome {
    /// Mass departing instantly per flow.
    pub departures: Vec<Q>,
    /// New backlogs (the unmet demands).
    pub backlogs: Vec<Q>,
}

/// Consumes simultaneous arrival and service jumps: requests `B_j + dA_j`
/// against resource `dC`; the shares depart instantly and the unmet demand
/// is the new backlog.
pub fn apply_jump(
    backlogs: &[Q],
    arrival_jumps: &[Q],
    service_jump: &Q,
    weights: &[Q],
) -> JumpOutcome {
    let requests: Vec<Ext> = backlogs
        .iter()
        .zip(arrival_jumps)
        .map(|(b, da)| Ext::Finite(b + da))
        .collect();
    let problem = AllocationProblem::new(weights.to_vec(), requests, service_jump.clone())
        .expect("nonnegative masses form a valid problem");
    let result = maxmin::allocate(&problem);
    let backlogs = result
        .unmet
        .iter()
        .map(|u| u.as_finite().expect("finite requests").clone())
        .collect();
    JumpOutcome {
        departures: result.shares,
        backlogs,
    }
}

/// Departure rates on a constant-rate stretch. Backlogged flows request
/// `+inf`, idle flows their arrival rate; a zero-backlog flow whose arrival
/// rate exceeds its share becomes backlogged without further iteration.
/// `next_event` is the time until the first backlogged flow empties under
/// the resulting constant drift, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentRates {
    pub departure_rates: Vec<Q>,
    pub next_event: Option<Q>,
}

pub fn segment_rates(
    backlogs: &[Q],
    arrival_rates: &[Q],
    service_rate: &Q,
    weights: &[Q],
) -> SegmentRates {
    let requests: Vec<Ext> = backlogs
        .iter()
        .zip(arrival_rates)
        .map(|(b, a)| {
            if b.is_positive() {
                Ext::PosInf
            } else {
                Ext::Finite(a.clone())
            }
        })
        .collect();
    let problem = AllocationProblem::new(weights.to_vec(), requests, service_rate.clone())
        .expect("nonnegative rates form a valid problem");
    let result = maxmin::allocate(&problem);
    let rates = result.shares;
    let mut next: Option<Q> = None;
    for j in 0..backlogs.len() {
        if !backlogs[j].is_positive() {
            continue;
        }
        let drain = &rates[j] - &arrival_rates[j];
        if drain.is_positive() {
            let dt = &backlogs[j] / &drain;
            if next.as_ref().is_none_or(|n| &dt < n) {
                next = Some(dt);
            }
        }
    }
    SegmentRates {
        departure_rates: rates,
        next_event: next,
    }
}

/// Runs the exact event-driven simulation.
pub fn simulate(scenario: &Scenario) -> Trajectory {
    let n = scenario.flows.len();
    let weights = scenario.weights();
    let grid = scenario.grid();
    let mut backlog: Vec<Q> = vec![Q::zero(); n];
    let mut dep_segs: Vec<Vec<(Q, Q, Q)>> = vec![Vec::new(); n];
    let mut path_segs: Vec<Vec<(Q, Q, Q)>> = vec![Vec::new(); n];
    let mut events: Vec<Event> = Vec::new();

    for (l, t_l) in grid.iter().enumerate() {
        let Some(t_next) = grid.get(l + 1) else {
            break; // horizon reached
        };
        // jumps at the segment start
        let arrival_jumps: Vec<Q> = (0..n).map(|j| scenario.arrivals(j).jump_at(t_l)).collect();
        let service_jump = scenario.service.jump_at(t_l);
        let jump = apply_jump(&backlog, &arrival_jumps, &service_jump, &weights);
        let dep_jumps = jump.departures;
        let backlog_jumps: Vec<Q> = (0..n).map(|j| &jump.backlogs[j] - &backlog[j]).collect();
        backlog = jump.backlogs;

        // constant rates on (t_l, t_next]
        let arrival_rates: Vec<Q> = (0..n)
            .map(|j| scenario.arrivals(j).left_slope(t_next))
            .collect();
        let service_rate = scenario.service.left_slope(t_next);

        let mut t_cur = t_l.clone();
        let mut first = true;
        loop {
            let sr = segment_rates(&backlog, &arrival_rates, &service_rate, &weights);
            let idle: BTreeSet<usize> = (0..n)
                .filter(|&j| !backlog[j].is_positive() && sr.departure_rates[j] == arrival_rates[j])
                .collect();
            if events.last().map(|e| &e.idle) != Some(&idle) {
                events.push(Event {
                    time: t_cur.clone(),
                    idle,
                });
            }
            let remaining = t_next - &t_cur;
            let dt = match &sr.next_event {
                Some(e) if e < &remaining => e.clone(),
                _ => remaining,
            };
            debug_assert!(dt.is_positive());
            for j in 0..n {
                let (jump_d, jump_b) = if first {
                    (dep_jumps[j].clone(), backlog_jumps[j].clone())
                } else {
                    (Q::zero(), Q::zero())
                };
                dep_segs[j].push((t_cur.clone(), jump_d, sr.departure_rates[j].clone()));
                path_segs[j].push((
                    t_cur.clone(),
                    jump_b,
                    &arrival_rates[j] - &sr.departure_rates[j],
                ));
            }
            first = false;
            for j in 0..n {
                backlog[j] += (&arrival_rates[j] - &sr.departure_rates[j]) * &dt;
                debug_assert!(!backlog[j].is_negative(), "backlog stays nonnegative");
            }
            t_cur += &dt;
            if &t_cur == t_next {
                break;
            }
        }
    }

    let departures: Vec<Plf> = dep_segs
        .into_iter()
        .map(|segs| {
            Plf::new(segs)
                .expect("simulation emits a valid PLF")
                .canonical()
        })
        .collect();
    let backlogs: Vec<PlPath> = path_segs.into_iter().map(PlPath::new).collect();
    #[cfg(debug_assertions)]
    for j in 0..n {
        // backlog path must equal arrivals minus departures
        let diff = PlPath::difference(scenario.arrivals(j), &departures[j]);
        for t in grid.iter() {
            debug_assert_eq!(diff.eval(t), backlogs[j].eval(t));
        }
    }
    Trajectory {
        scenario: scenario.clone(),
        departures,
        backlogs,
        events,
    }
}

/// Verifies Definition-1 compliance of a trajectory: workconserving service
/// and weighted departure dominance for backlogged flows, checked atomically
/// on rate pieces and jumps (sufficient because departures are piecewise
/// affine). Reports the first violation.
pub fn gps_compliance(traj: &Trajectory, weights: &[Q]) -> BoundReport {
    let n = traj.scenario.flows.len();
    assert_eq!(weights.len(), n);
    let horizon = &traj.scenario.horizon;
    let two = crate::rational::q(2);

    // atom grid: all linearity or sign changes of any curve involved
    let mut times: Vec<Q> = vec![Q::zero(), horizon.clone()];
    let mut add = |t: &Q| {
        if !t.is_negative() && t <= horizon {
            times.push(t.clone());
        }
    };
    for b in traj.scenario.service.breakpoints() {
        add(b);
    }
    for j in 0..n {
        for b in traj.departures[j].breakpoints() {
            add(b);
        }
        for (lo, hi) in traj.backlogs[j].positive_windows(horizon) {
            add(&lo);
            add(&hi);
        }
    }
    times.sort();
    times.dedup();

    let mut checked = 0usize;
    let mut worst: Option<(Q, Witness)> = None;
    let mut note = |slack: Q, witness: Witness| {
        if worst.as_ref().is_none_or(|(w, _)| &slack < w) {
            worst = Some((slack, witness));
        }
    };

    for w in times.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let mid = (a + b) / &two;
        let span = b - a;
        let rates: Vec<Q> = (0..n)
            .map(|j| (traj.departures[j].eval(b) - traj.departures[j].eval_right(a)) / &span)
            .collect();
        let service_rate =
            (traj.scenario.service.eval(b) - traj.scenario.service.eval_right(a)) / &span;
        let backlogged: Vec<bool> = (0..n)
            .map(|j| traj.backlogs[j].eval(&mid).is_positive())
            .collect();
        let total_rate: Q = rates.iter().sum();
        let total_backlog: Q = (0..n).map(|j| traj.backlogs[j].eval(&mid)).sum();

        // capacity: departures never exceed service
        checked += 1;
        note(
            &service_rate - &total_rate,
            Witness {
                time: mid.clone(),
                interval: Some((a.clone(), b.clone())),
                flows: vec![],
                detail: "total departure rate exceeds service rate".into(),
            },
        );
        // workconserving: full rate whenever backlog is present
        if total_backlog.is_positive() {
            checked += 1;
            note(
                &total_rate - &service_rate,
                Witness {
                    time: mid.clone(),
                    interval: Some((a.clone(), b.clone())),
                    flows: vec![],
                    detail: "server idles while backlog is positive".into(),
                },
            );
        }
        // weighted dominance for backlogged flows
        for i in 0..n {
            if !backlogged[i] {
                continue;
            }
            for j in 0..n {
                if i == j {
                    continue;
                }
                checked += 1;
                note(
                    &rates[i] / &weights[i] - &rates[j] / &weights[j],
                    Witness {
                        time: mid.clone(),
                        interval: Some((a.clone(), b.clone())),
                        flows: vec![i, j],
                        detail: "backlogged flow served below a competitor's weighted rate".into(),
                    },
                );
            }
        }

        // jumps at the left end of the piece
        let u = a;
        let dep_jumps: Vec<Q> = (0..n).map(|j| traj.departures[j].jump_at(u)).collect();
        let service_jump = traj.scenario.service.jump_at(u);
        let arrival_jumps: Vec<Q> = (0..n)
            .map(|j| {
                traj.scenario.flows[j]
                    .arrivals
                    .as_ref()
                    .map(|arr| arr.jump_at(u))
                    .unwrap_or_else(Q::zero)
            })
            .collect();
        let any_jump = !service_jump.is_zero()
            || dep_jumps.iter().any(|x| !x.is_zero())
            || arrival_jumps.iter().any(|x| !x.is_zero());
        if any_jump {
            let offered: Q = (0..n)
                .map(|j| traj.backlogs[j].eval(u) + &arrival_jumps[j])
                .sum();
            let served: Q = dep_jumps.iter().sum();
            let expected = offered.min(service_jump.clone());
            checked += 1;
            let gap = &served - &expected;
            note(
                if gap.is_negative() { gap.clone() } else { -gap },
                Witness {
                    time: u.clone(),
                    interval: None,
                    flows: vec![],
                    detail: "instantaneous service differs from the waste-free amount".into(),
                },
            );
            for i in 0..n {
                // only a flow left backlogged at the instant itself is owed
                // the top weighted ratio; one served in full and backlogged
                // later by rates cannot claim more at the jump
                if !traj.backlogs[i].eval_right(u).is_positive() {
                    continue;
                }
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    checked += 1;
                    note(
                        &dep_jumps[i] / &weights[i] - &dep_jumps[j] / &weights[j],
                        Witness {
                            time: u.clone(),
                            interval: None,
                            flows: vec![i, j],
                            detail: "instantaneous service violates weighted dominance".into(),
                        },
                    );
                }
            }
        }
    }

    let (worst_slack, witness) = match worst {
        Some((w, wit)) => {
            let witness = w.is_negative().then_some(wit);
            (w, witness)
        }
        None => (Q::zero(), None),
    };
    BoundReport {
        name: "gps-compliance".into(),
        checked,
        worst_slack,
        tolerance: Q::zero(),
        witness,
    }
}

#[cfg(test)]
mod tests;
