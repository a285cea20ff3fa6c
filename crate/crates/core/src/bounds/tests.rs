use super::*;
use crate::curves::{leftover, Envelope, FlowSpec};
use crate::rational::{q, qr};
use crate::sampling;
use crate::simulator::{simulate, Scenario};
use rand::Rng;

#[test]
fn b_star_greedy_token_bucket() {
    // greedy 1 + 2t against a dedicated half of a rate-4 link
    let a = Plf::token_bucket(q(1), q(2));
    let c = Plf::constant_rate(q(4));
    for t in [qr(1, 2), q(1), q(5)] {
        assert_eq!(b_star(&a, &qr(1, 2), &c, &t).unwrap(), q(1));
    }
}

#[test]
fn b_star_dedicated_link_is_zero() {
    let a = Plf::constant_rate(q(2));
    let c = Plf::constant_rate(q(3));
    assert_eq!(b_star(&a, &q(1), &c, &q(7)).unwrap(), q(0));
}

#[test]
fn b_star_respects_affine_bound() {
    let mut rng = sampling::rng(301);
    for _ in 0..50 {
        let sigma = sampling::rand_q(&mut rng, 0, 6, 8);
        let rate = sampling::rand_q(&mut rng, 1, 8, 4);
        let share = qr(rng.random_range(1..=8), 8);
        // rho <= x R
        let rho = &share * &rate * qr(rng.random_range(0..=8), 8);
        let latency = sampling::rand_q(&mut rng, 0, 3, 4);
        let bound = b_star_affine_bound(&sigma, &rho, &share, &rate, &latency).unwrap();
        assert_eq!(bound, &sigma + &rho * &latency);
        let a = Plf::token_bucket(sigma.clone(), rho.clone());
        let c = Plf::latency_rate(rate.clone(), latency.clone());
        for t in [qr(1, 3), q(1), q(4), q(20)] {
            assert!(b_star(&a, &share, &c, &t).unwrap() <= bound);
        }
    }
}

#[test]
fn b_star_never_below_dense_grid() {
    // the candidate supremum dominates any grid evaluation and exceeds it
    // by at most the grid resolution times the steepest slope
    let mut rng = sampling::rng(303);
    for _ in 0..40 {
        let envelope = sampling::random_envelope(&mut rng, 3);
        let a = sampling::random_compliant_arrivals(&mut rng, envelope.plf().unwrap(), &q(8));
        let curve = sampling::random_service_curve(&mut rng, 2);
        let c = sampling::random_service_process(&mut rng, curve.plf(), &q(8));
        let share = qr(rng.random_range(0..=8), 8);
        let t = sampling::rand_q(&mut rng, 0, 8, 2);
        let exact = b_star(&a, &share, &c, &t).unwrap();
        let step = qr(1, 16);
        let mut grid_best = Q::zero();
        let mut r = Q::zero();
        let mut steepest = Q::zero();
        while r <= t {
            let v = a.range(&r, &t).unwrap() - &share * &c.range(&r, &t).unwrap();
            grid_best = grid_best.max(v);
            steepest = steepest
                .max(a.left_slope(&(&r + &step)))
                .max(&share * &c.left_slope(&(&r + &step)));
            r += &step;
        }
        assert!(exact >= grid_best, "exact {exact} below grid {grid_best}");
        // jumps can hide between grid points, but only once per breakpoint;
        // allow slope drift plus the largest jump of either input
        let max_jump: Q = a
            .segments()
            .iter()
            .map(|s| s.jump.clone())
            .chain(c.segments().iter().map(|s| &share * &s.jump))
            .fold(Q::zero(), |acc, j| acc.max(j));
        assert!(
            &exact - &grid_best <= &steepest * &step + max_jump,
            "gap beyond resolution: exact {exact}, grid {grid_best}"
        );
    }
}

#[test]
fn b_star_affine_bound_edge_cases() {
    assert_eq!(
        b_star_affine_bound(&q(1), &q(2), &qr(1, 2), &q(4), &qr(1, 2)).unwrap(),
        q(2)
    );
    assert_eq!(
        b_star_affine_bound(&q(3), &q(2), &q(1), &q(2), &q(0)).unwrap(),
        q(3)
    );
    assert_eq!(
        b_star_affine_bound(&q(0), &q(0), &qr(1, 2), &q(2), &q(5)).unwrap(),
        q(0)
    );
    assert!(matches!(
        b_star_affine_bound(&q(1), &q(3), &qr(1, 2), &q(4), &q(1)),
        Err(BoundError::RateAboveShare { .. })
    ));
}

fn simple_scenario() -> Scenario {
    let a1 = Plf::new(vec![(q(0), q(0), q(3)), (q(1), q(0), q(0))]).unwrap();
    let a2 = Plf::constant_rate(qr(1, 2));
    Scenario::new(
        vec![
            FlowSpec::new("1", q(1), Envelope::Unbounded, Some(a1)).unwrap(),
            FlowSpec::new("2", q(1), Envelope::Unbounded, Some(a2)).unwrap(),
        ],
        Plf::constant_rate(q(2)),
        q(3),
    )
    .unwrap()
}

#[test]
fn departure_bound_single_flow_guaranteed_rate() {
    let traj = simulate(&simple_scenario());
    let mut shares = BTreeMap::new();
    shares.insert(0usize, qr(1, 2)); // phi_1 / (phi_1 + phi_2)
    let report = check_departure_bound(&traj, &shares, &q(2), &q(0)).unwrap();
    assert!(report.pass());
    assert_eq!(report.worst_slack, q(1)); // LHS 3, RHS 2
}

#[test]
fn departure_bound_empty_subset_trivially_passes() {
    let traj = simulate(&simple_scenario());
    let report = check_departure_bound(&traj, &BTreeMap::new(), &q(2), &q(0)).unwrap();
    assert!(report.pass());
    assert_eq!(report.worst_slack, q(0));
}

#[test]
fn departure_bound_rejects_infeasible_requests() {
    let traj = simulate(&simple_scenario());
    let mut shares = BTreeMap::new();
    shares.insert(0usize, q(2)); // more than the whole unit resource
    assert!(matches!(
        check_departure_bound(&traj, &shares, &q(2), &q(0)),
        Err(BoundError::Infeasible)
    ));
    let mut unknown = BTreeMap::new();
    unknown.insert(9usize, qr(1, 4));
    assert!(matches!(
        check_departure_bound(&traj, &unknown, &q(2), &q(0)),
        Err(BoundError::UnknownFlow(9))
    ));
}

#[test]
fn departure_bound_rhs_monotone_in_shares() {
    // raising a share within feasibility never lowers the bound
    let traj = simulate(&simple_scenario());
    let t = q(2);
    let mut lo = BTreeMap::new();
    lo.insert(0usize, qr(1, 4));
    let mut hi = BTreeMap::new();
    hi.insert(0usize, qr(1, 2));
    let r_lo = check_departure_bound(&traj, &lo, &t, &q(0)).unwrap();
    let r_hi = check_departure_bound(&traj, &hi, &t, &q(0)).unwrap();
    // same LHS, so larger bound means smaller slack
    assert!(r_hi.worst_slack <= r_lo.worst_slack);
}

#[test]
fn subset_bounds_on_greedy_scenario() {
    let mut rng = sampling::rng(307);
    for _ in 0..10 {
        let n = rng.random_range(2..=4);
        let flows = sampling::random_flows(&mut rng, n, 3);
        let curve = sampling::random_service_curve(&mut rng, 3);
        let scenario = Scenario::greedy_lazy(&flows, &curve, q(8)).unwrap();
        let traj = simulate(&scenario);
        let weights = scenario.weights();
        for _ in 0..10 {
            let members = sampling::random_subset(&mut rng, n);
            let shares = sampling::random_feasible_shares(&mut rng, &weights, &members);
            let t = sampling::rand_q(&mut rng, 0, 8, 4);
            let s = &t * qr(rng.random_range(0..=4), 4);
            let report = check_backlog_output_bounds(&traj, &shares, &s, &t, &q(0)).unwrap();
            assert!(report.pass(), "{report:?}");
            let th2 = check_departure_bound(&traj, &shares, &t, &q(0)).unwrap();
            assert!(th2.pass(), "{th2:?}");
        }
    }
}

#[test]
fn output_bound_at_equal_endpoints_reduces_to_bstar_sum() {
    let traj = simulate(&simple_scenario());
    let mut shares = BTreeMap::new();
    shares.insert(0usize, qr(1, 4));
    shares.insert(1usize, qr(1, 4));
    let report = check_backlog_output_bounds(&traj, &shares, &q(2), &q(2), &q(0)).unwrap();
    assert!(report.pass());
}

#[test]
fn subset_bounds_reject_bad_interval() {
    let traj = simulate(&simple_scenario());
    let shares = BTreeMap::new();
    assert!(check_backlog_output_bounds(&traj, &shares, &q(3), &q(1), &q(0)).is_err());
}

#[test]
fn token_bucket_reduction_to_burst_sum() {
    // with x_j = rho_j / R at a constant-rate lazy link, the backlog bound
    // reduces to sum of bursts: B*_j = sigma_j
    let mut rng = sampling::rng(311);
    for _ in 0..20 {
        let n = rng.random_range(2..=4);
        let rate_total = q(8);
        let mut flows = Vec::new();
        let mut shares = BTreeMap::new();
        for j in 0..n {
            let sigma = sampling::rand_q(&mut rng, 0, 4, 4);
            let rho = sampling::rand_q(&mut rng, 0, 2, 4);
            flows.push(
                FlowSpec::new(
                    format!("f{j}"),
                    sampling::rand_weight(&mut rng),
                    Envelope::bounded(Plf::token_bucket(sigma, rho.clone())).unwrap(),
                    None,
                )
                .unwrap(),
            );
            shares.insert(j, rho / &rate_total);
        }
        let curve = crate::curves::ServiceCurve::constant_rate(rate_total.clone());
        let scenario = Scenario::greedy_lazy(&flows, &curve, q(6)).unwrap();
        let traj = simulate(&scenario);
        let t = sampling::rand_q(&mut rng, 1, 6, 2);
        let mut sum_bstar = Q::zero();
        let mut sum_sigma = Q::zero();
        for (j, x) in &shares {
            let a = scenario.flows[*j].arrivals.as_ref().unwrap();
            sum_bstar += b_star(a, x, &scenario.service, &t).unwrap();
            sum_sigma += a.eval_right(&Q::zero());
        }
        assert_eq!(sum_bstar, sum_sigma);
        let report = check_backlog_output_bounds(&traj, &shares, &q(0), &t, &q(0)).unwrap();
        assert!(report.pass());
    }
}

#[test]
fn strict_service_on_greedy_scenario_is_tight() {
    // flow backlogged from the start: slack reaches exactly zero
    let env = Envelope::bounded(Plf::token_bucket(q(1), qr(1, 4))).unwrap();
    let flows = vec![
        FlowSpec::new("1", q(1), env.clone(), None).unwrap(),
        FlowSpec::new("2", q(1), env, None).unwrap(),
    ];
    let curve = crate::curves::ServiceCurve::constant_rate(q(1));
    let scenario = Scenario::greedy_lazy(&flows, &curve, q(6)).unwrap();
    let traj = simulate(&scenario);
    let s1 = leftover(&flows, &"1".into(), &curve).unwrap();
    let report = check_strict_service(&traj, 0, &s1, &q(0)).unwrap();
    assert!(report.pass(), "{report:?}");
    assert_eq!(report.worst_slack, q(0));
}

#[test]
fn minimum_rate_curve_always_passes() {
    let mut rng = sampling::rng(313);
    for _ in 0..10 {
        let n = rng.random_range(2..=4);
        let (flows, curve, scenario) = sampling::random_scenario(&mut rng, n, 3, 3, q(8));
        let traj = simulate(&scenario);
        let total: Q = flows.iter().map(|f| &f.weight).sum();
        for j in 0..n {
            let floor =
                crate::curves::ServiceCurve::new(curve.plf().scale(&(&flows[j].weight / &total)))
                    .unwrap();
            let report = check_strict_service(&traj, j, &floor, &q(0)).unwrap();
            assert!(report.pass(), "{report:?}");
        }
    }
}

#[test]
fn strict_service_detects_overclaimed_curve() {
    // claim the full link for flow 1 while a competitor is active
    let scenario = simple_scenario();
    let traj = simulate(&scenario);
    let too_big = crate::curves::ServiceCurve::constant_rate(q(2));
    let report = check_strict_service(&traj, 0, &too_big, &q(0)).unwrap();
    assert!(!report.pass());
    assert!(report.witness.is_some());
}

#[test]
fn strict_service_with_no_backlog_passes_vacuously() {
    let scenario = Scenario::new(
        vec![FlowSpec::new("1", q(1), Envelope::Unbounded, Some(Plf::zero())).unwrap()],
        Plf::constant_rate(q(1)),
        q(2),
    )
    .unwrap();
    let traj = simulate(&scenario);
    let report = check_strict_service(
        &traj,
        0,
        &crate::curves::ServiceCurve::constant_rate(q(1)),
        &q(0),
    )
    .unwrap();
    assert!(report.pass());
    assert_eq!(report.checked, 0);
}
