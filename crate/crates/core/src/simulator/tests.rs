use super::*;
use crate::bounds;
use crate::curves::{greedy_lazy, Envelope};
use crate::rational::{q, qr};
use crate::sampling;
use rand::Rng;

fn flow(id: &str, weight: i64, arrivals: Plf) -> FlowSpec {
    FlowSpec::new(id, q(weight), Envelope::Unbounded, Some(arrivals)).unwrap()
}

/// Two flows at a rate-2 link: flow 1 bursts at rate 3 for one second,
/// flow 2 trickles at rate 1/2 throughout.
fn reference_scenario() -> Scenario {
    let a1 = Plf::new(vec![(q(0), q(0), q(3)), (q(1), q(0), q(0))]).unwrap();
    let a2 = Plf::constant_rate(qr(1, 2));
    Scenario::new(
        vec![flow("1", 1, a1), flow("2", 1, a2)],
        Plf::constant_rate(q(2)),
        q(3),
    )
    .unwrap()
}

#[test]
fn simulate_reference_scenario() {
    let traj = simulate(&reference_scenario());
    assert_eq!(traj.backlogs[0].eval(&q(1)), qr(3, 2));
    assert_eq!(traj.backlogs[0].eval(&q(2)), q(0));
    assert_eq!(traj.departures[0].eval(&q(2)), q(3));
    assert_eq!(traj.departures[1].eval(&q(2)), q(1));
    // flow 1 drains at rate 3/2 on (1, 2)
    assert_eq!(traj.backlogs[0].eval(&qr(3, 2)), qr(3, 4));
    // event log: flow 1 backlogged from the start, everyone idle from t=2
    assert_eq!(traj.events[0].time, q(0));
    assert_eq!(
        traj.events[0].idle.iter().copied().collect::<Vec<_>>(),
        vec![1]
    );
    let last = traj.events.last().unwrap();
    assert_eq!(last.time, q(2));
    assert_eq!(last.idle.len(), 2);
}

#[test]
fn simulate_zero_arrivals() {
    let scenario = Scenario::new(
        vec![flow("1", 1, Plf::zero()), flow("2", 2, Plf::zero())],
        Plf::constant_rate(q(2)),
        q(5),
    )
    .unwrap();
    let traj = simulate(&scenario);
    for j in 0..2 {
        assert_eq!(traj.departures[j].eval(&q(5)), q(0));
        assert_eq!(traj.backlogs[j].eval(&q(3)), q(0));
    }
}

#[test]
fn simulate_greedy_lazy_matches_closed_form() {
    let mut rng = sampling::rng(201);
    for _ in 0..20 {
        let n = rng.random_range(2..=4);
        let flows = sampling::random_flows(&mut rng, n, 3);
        let curve = sampling::random_service_curve(&mut rng, 3);
        let horizon = q(12);
        let scenario = Scenario::greedy_lazy(&flows, &curve, horizon.clone()).unwrap();
        let traj = simulate(&scenario);
        let closed = greedy_lazy(&flows, &curve).unwrap();
        let mut probes: Vec<Q> = traj.events.iter().map(|e| e.time.clone()).collect();
        probes.push(horizon.clone());
        probes.push(qr(19, 3));
        for t in &probes {
            for j in 0..n {
                assert_eq!(
                    traj.departures[j].eval(t),
                    closed[j].eval(t),
                    "flow {j} at t={t}"
                );
            }
        }
    }
}

#[test]
fn apply_jump_examples() {
    let w = [q(1), q(1)];
    let out = apply_jump(&[q(0), q(0)], &[q(3), q(1)], &q(2), &w);
    assert_eq!(out.backlogs, vec![q(2), q(0)]);
    assert_eq!(out.departures, vec![q(1), q(1)]);

    let out = apply_jump(&[q(1), q(2)], &[q(1), q(0)], &q(0), &w);
    assert_eq!(out.backlogs, vec![q(2), q(2)]);
    assert_eq!(out.departures, vec![q(0), q(0)]);

    let out = apply_jump(&[q(1), q(2)], &[q(0), q(0)], &q(5), &w);
    assert_eq!(out.backlogs, vec![q(0), q(0)]);
    assert_eq!(out.departures, vec![q(1), q(2)]);

    // a flow with nothing pending at the instant receives nothing
    let out = apply_jump(&[q(0), q(3)], &[q(0), q(0)], &q(2), &w);
    assert_eq!(out.departures, vec![q(0), q(2)]);
    assert_eq!(out.backlogs, vec![q(0), q(1)]);
}

#[test]
fn segment_rates_examples() {
    let w = [q(1), q(1)];
    let sr = segment_rates(&[q(0), q(0)], &[q(3), qr(1, 2)], &q(2), &w);
    assert_eq!(sr.departure_rates, vec![qr(3, 2), qr(1, 2)]);
    assert_eq!(sr.next_event, None);

    let sr = segment_rates(&[qr(3, 2), q(0)], &[q(0), qr(1, 2)], &q(2), &w);
    assert_eq!(sr.departure_rates, vec![qr(3, 2), qr(1, 2)]);
    assert_eq!(sr.next_event, Some(q(1)));

    let sr = segment_rates(&[q(0), q(0)], &[q(1), qr(1, 2)], &q(2), &w);
    assert_eq!(sr.departure_rates, vec![q(1), qr(1, 2)]);
    assert_eq!(sr.next_event, None);

    // zero service with backlog: nothing departs and nothing drains
    let sr = segment_rates(&[q(1), q(0)], &[q(0), q(0)], &q(0), &w);
    assert_eq!(sr.departure_rates, vec![q(0), q(0)]);
    assert_eq!(sr.next_event, None);
}

#[test]
fn simulated_trajectories_are_compliant() {
    let traj = simulate(&reference_scenario());
    let report = gps_compliance(&traj, &traj.scenario.weights());
    assert!(report.pass(), "{report:?}");

    let mut rng = sampling::rng(203);
    for _ in 0..15 {
        let (_, _, scenario) = sampling::random_scenario(&mut rng, 3, 3, 3, q(8));
        let traj = simulate(&scenario);
        let report = gps_compliance(&traj, &scenario.weights());
        assert!(report.pass(), "{report:?}");
    }
}

#[test]
fn compliance_catches_starved_backlogged_flow() {
    // both flows feed at rate 1 into a rate-1 link; all service goes to
    // flow 2 even though flow 1 is backlogged
    let a = Plf::constant_rate(q(1));
    let scenario = Scenario::new(
        vec![flow("1", 1, a.clone()), flow("2", 1, a.clone())],
        Plf::constant_rate(q(1)),
        q(4),
    )
    .unwrap();
    let departures = vec![Plf::zero(), Plf::constant_rate(q(1))];
    let backlogs = vec![
        PlPath::difference(&a, &departures[0]),
        PlPath::difference(&a, &departures[1]),
    ];
    let traj = Trajectory {
        scenario,
        departures,
        backlogs,
        events: vec![],
    };
    let report = gps_compliance(&traj, &[q(1), q(1)]);
    assert!(!report.pass());
    let witness = report.witness.expect("violation reported");
    assert_eq!(witness.flows, vec![0, 1]);
}

#[test]
fn compliance_catches_idling_server() {
    let a = Plf::constant_rate(q(1));
    let scenario = Scenario::new(
        vec![flow("1", 1, a.clone()), flow("2", 1, a.clone())],
        Plf::constant_rate(q(1)),
        q(4),
    )
    .unwrap();
    let departures = vec![Plf::zero(), Plf::zero()];
    let backlogs = vec![
        PlPath::difference(&a, &departures[0]),
        PlPath::difference(&a, &departures[1]),
    ];
    let traj = Trajectory {
        scenario,
        departures,
        backlogs,
        events: vec![],
    };
    let report = gps_compliance(&traj, &[q(1), q(1)]);
    assert!(!report.pass());
    assert!(report
        .witness
        .expect("violation reported")
        .detail
        .contains("idles"));
}

#[test]
fn greedy_lazy_closed_form_is_compliant() {
    // build a trajectory from the closed form and check Definition 1
    let mut rng = sampling::rng(207);
    for _ in 0..10 {
        let n = rng.random_range(2..=3);
        let flows = sampling::random_flows(&mut rng, n, 3);
        let curve = sampling::random_service_curve(&mut rng, 2);
        let horizon = q(10);
        let scenario = Scenario::greedy_lazy(&flows, &curve, horizon.clone()).unwrap();
        let closed = greedy_lazy(&flows, &curve).unwrap();
        let backlogs: Vec<PlPath> = (0..n)
            .map(|j| PlPath::difference(scenario.flows[j].arrivals.as_ref().unwrap(), &closed[j]))
            .collect();
        let traj = Trajectory {
            scenario: scenario.clone(),
            departures: closed,
            backlogs,
            events: vec![],
        };
        let report = gps_compliance(&traj, &scenario.weights());
        assert!(report.pass(), "{report:?}");
    }
}

#[test]
fn conservation_and_event_count() {
    let mut rng = sampling::rng(211);
    for _ in 0..15 {
        let n = rng.random_range(2..=5);
        let (_, _, scenario) = sampling::random_scenario(&mut rng, n, 3, 3, q(8));
        let traj = simulate(&scenario);
        // conservation on random intervals
        for _ in 0..10 {
            let a = sampling::rand_q(&mut rng, 0, 8, 4);
            let b = sampling::rand_q(&mut rng, 0, 8, 4);
            let (s, t) = if a <= b { (a, b) } else { (b, a) };
            let total: Q = (0..n)
                .map(|j| traj.departures[j].range(&s, &t).unwrap())
                .sum();
            assert!(total <= scenario.service.range(&s, &t).unwrap());
        }
        // at most n internal events per input segment
        for count in traj.internal_event_counts() {
            assert!(count <= n, "{count} internal events for {n} flows");
        }
        // departures never exceed arrivals; backlogs stay nonnegative
        for j in 0..n {
            assert!(!traj.backlogs[j]
                .lower_bound_on(&scenario.horizon)
                .is_negative());
        }
    }
}

#[test]
fn refinement_of_inputs_leaves_trajectory_unchanged() {
    let mut rng = sampling::rng(213);
    for _ in 0..10 {
        let n = rng.random_range(2..=4);
        let (_, _, scenario) = sampling::random_scenario(&mut rng, n, 3, 3, q(8));
        let traj = simulate(&scenario);

        // split a segment of every arrival process at a redundant point
        let mut refined = scenario.clone();
        for f in &mut refined.flows {
            let a = f.arrivals.take().unwrap();
            let cut = sampling::rand_q(&mut rng, 1, 15, 2);
            let refined_plf = insert_redundant_breakpoint(&a, &cut);
            f.arrivals = Some(refined_plf);
        }
        let traj2 = simulate(&refined);
        for j in 0..n {
            assert!(
                traj.departures[j].equivalent(&traj2.departures[j]),
                "refinement changed flow {j}"
            );
        }
        assert_eq!(traj.events, traj2.events);
    }
}

fn insert_redundant_breakpoint(f: &Plf, at: &Q) -> Plf {
    if f.breakpoints().any(|b| b == at) || !at.is_positive() {
        return f.clone();
    }
    // `at` is interior to a segment, so its slope continues past it
    let slope_here = f.left_slope(at);
    let mut segs: Vec<(Q, Q, Q)> = f
        .segments()
        .iter()
        .map(|s| (s.start.clone(), s.jump.clone(), s.slope.clone()))
        .collect();
    let pos = segs.partition_point(|(s, _, _)| s < at);
    segs.insert(pos, (at.clone(), q(0), slope_here));
    Plf::new(segs).unwrap()
}

#[test]
fn unbacklogged_flows_stay_unbacklogged_within_segment() {
    let mut rng = sampling::rng(217);
    for _ in 0..10 {
        let n = rng.random_range(2..=4);
        let (_, _, scenario) = sampling::random_scenario(&mut rng, n, 3, 3, q(8));
        let traj = simulate(&scenario);
        let grid = scenario.grid();
        for w in grid.windows(2) {
            // once idle inside the segment, idle until the segment ends
            let inside: Vec<&Event> = traj
                .events
                .iter()
                .filter(|e| e.time >= w[0] && e.time < w[1])
                .collect();
            for pair in inside.windows(2) {
                assert!(
                    pair[0].idle.is_subset(&pair[1].idle),
                    "idle set shrank inside a segment: {pair:?}"
                );
            }
        }
    }
}

#[test]
fn backlog_difference_equation_holds_between_events() {
    // B_j(t) = [B_j(s) + A_j(s,t) - phi_j f]+ with f the fair share of the
    // allocation problem with X = C(s,t), for event times s < t inside one
    // input segment
    let mut rng = sampling::rng(219);
    for _ in 0..10 {
        let n = rng.random_range(2..=4);
        let (_, _, scenario) = sampling::random_scenario(&mut rng, n, 3, 3, q(8));
        let traj = simulate(&scenario);
        let grid = scenario.grid();
        for w in grid.windows(2) {
            let mut times: Vec<Q> = traj
                .events
                .iter()
                .map(|e| e.time.clone())
                .filter(|t| t > &w[0] && t < &w[1])
                .collect();
            times.push(w[1].clone());
            // s strictly after the segment start so that no jump interferes
            let mid = (&w[0] + &w[1]) / q(2);
            times.push(mid);
            times.sort();
            times.dedup();
            for pair in times.windows(2) {
                let (s, t) = (&pair[0], &pair[1]);
                let requests: Vec<Ext> = (0..n)
                    .map(|j| {
                        Ext::Finite(
                            traj.backlogs[j].eval(s)
                                + scenario.flows[j]
                                    .arrivals
                                    .as_ref()
                                    .unwrap()
                                    .range(s, t)
                                    .unwrap(),
                        )
                    })
                    .collect();
                let problem = AllocationProblem::new(
                    scenario.weights(),
                    requests.clone(),
                    scenario.service.range(s, t).unwrap(),
                )
                .unwrap();
                let f = maxmin::fair_share(&problem);
                for j in 0..n {
                    let x = requests[j].as_finite().unwrap();
                    let expected = match &f {
                        Ext::PosInf => Q::zero(),
                        Ext::Finite(level) => {
                            let served = &scenario.flows[j].weight * level;
                            if x > &served {
                                x - served
                            } else {
                                Q::zero()
                            }
                        }
                        Ext::NegInf => unreachable!(),
                    };
                    assert_eq!(traj.backlogs[j].eval(t), expected, "pair ({s},{t})");
                }
            }
        }
    }
}

#[test]
fn subset_bounds_on_reference_scenario() {
    let traj = simulate(&reference_scenario());
    let mut shares = std::collections::BTreeMap::new();
    shares.insert(0usize, qr(1, 2));
    let report = bounds::check_departure_bound(&traj, &shares, &q(2), &q(0)).unwrap();
    assert!(report.pass());
    // D_1(2) = 3, RHS = inf{A_1(s) + C(s,2)/2} = 2 at s = 0
    assert_eq!(report.worst_slack, q(1));
    let cor = bounds::check_backlog_output_bounds(&traj, &shares, &q(0), &q(2), &q(0)).unwrap();
    assert!(cor.pass());
}
