//! Command implementations. Each returns printable artifacts plus summary
//! lines and an exit status; the binary decides where artifacts go.

use crate::output;
use crate::scenario::{parse_grid, ScenarioFile};
use anyhow::{anyhow, bail, Result};
use gps_calculus::bounds::{check_backlog_output_bounds, check_strict_service, check_departure_bound, BoundReport};
use gps_calculus::curves::{leftover, universal, FlowId};
use gps_calculus::oracle::{
    backlog_gap, leftover_bruteforce, simulate_euler, universal_bruteforce, OracleConfig,
};
use gps_calculus::rational::{q, qr, to_decimal, Ext, Q};
use gps_calculus::sampling;
use gps_calculus::simulator::{gps_compliance, simulate};
use num_traits::Zero;
use rand::Rng;
use std::collections::BTreeMap;

/// What a command produced: named CSV artifacts, human-readable summary
/// lines, and whether every check passed.
#[derive(Debug, Default)]
pub struct Outcome {
    pub artifacts: Vec<(&'static str, String)>,
    pub summary: Vec<String>,
    pub failed: bool,
}

impl Outcome {
    fn check(&mut self, name: &str, ok: bool, detail: String) {
        let verdict = if ok { "PASS" } else { "FAIL" };
        self.summary.push(format!("{verdict} {name}: {detail}"));
        self.failed |= !ok;
    }

    fn report(&mut self, name: &str, report: &BoundReport) {
        self.check(
            name,
            report.pass(),
            format!(
                "worst slack {} over {} checks{}",
                to_decimal(&report.worst_slack, 12),
                report.checked,
                report
                    .witness
                    .as_ref()
                    .map(|w| format!(" ({} at t = {})", w.detail, to_decimal(&w.time, 12)))
                    .unwrap_or_default()
            ),
        );
    }
}

fn flow_of_interest(file: &ScenarioFile, flag: Option<&str>) -> Result<FlowId> {
    let id = match flag {
        Some(id) => FlowId::new(id),
        None => file
            .flow_of_interest
            .clone()
            .ok_or_else(|| anyhow!("this command needs --flow <id> (or options.flow)"))?,
    };
    if !file.flows.iter().any(|f| f.id == id) {
        bail!("unknown flow id `{id}`");
    }
    Ok(id)
}

/// `leftover`: the strict service curve of one flow as a breakpoint table.
pub fn leftover_cmd(file: &ScenarioFile, flow: Option<&str>) -> Result<Outcome> {
    let id = flow_of_interest(file, flow)?;
    let curve = leftover(&file.flows, &id, &file.curve).map_err(|e| anyhow!("{e}"))?;
    let mut out = Outcome::default();
    out.artifacts
        .push(("curve.csv", output::curve_table(&curve)));
    Ok(out)
}

/// `universal`: the aggregate fair-share curve as a breakpoint table.
pub fn universal_cmd(file: &ScenarioFile) -> Result<Outcome> {
    let curve = universal(&file.flows, &file.curve).map_err(|e| anyhow!("{e}"))?;
    let mut out = Outcome::default();
    out.artifacts
        .push(("curve.csv", output::universal_table(&curve)));
    Ok(out)
}

/// `simulate`: exact trajectory and event log.
pub fn simulate_cmd(file: &ScenarioFile, grid: Option<&str>) -> Result<Outcome> {
    let scenario = file.to_scenario()?;
    let traj = simulate(&scenario);
    let grid = match grid.or(file.grid.as_deref()) {
        Some(spec) => parse_grid(spec, &file.horizon)?,
        None => output::default_trajectory_grid(&traj),
    };
    let mut out = Outcome::default();
    out.artifacts
        .push(("trajectory.csv", output::trajectory_table(&traj, &grid)));
    out.artifacts
        .push(("events.csv", output::events_table(&traj)));
    Ok(out)
}

/// `sample`: evaluation grid of the leftover curve of one flow, or of the
/// universal curve when no flow is given.
pub fn sample_cmd(file: &ScenarioFile, flow: Option<&str>, grid: Option<&str>) -> Result<Outcome> {
    let spec = grid
        .or(file.grid.as_deref())
        .map(str::to_string)
        .unwrap_or_else(|| format!("0:{}:{}", file.horizon, &file.horizon / q(10)));
    let grid = parse_grid(&spec, &file.horizon)?;
    let explicit_flow = flow.is_some() || file.flow_of_interest.is_some();
    let values: Vec<Ext> = if explicit_flow {
        let id = flow_of_interest(file, flow)?;
        let curve = leftover(&file.flows, &id, &file.curve).map_err(|e| anyhow!("{e}"))?;
        grid.iter().map(|t| Ext::Finite(curve.eval(t))).collect()
    } else {
        let curve = universal(&file.flows, &file.curve).map_err(|e| anyhow!("{e}"))?;
        grid.iter().map(|t| curve.eval(t)).collect()
    };
    let mut out = Outcome::default();
    out.artifacts
        .push(("sample.csv", output::sample_table(&grid, &values)));
    Ok(out)
}

/// `bounds`: strict service curve, departure, backlog, and output bounds on
/// the simulated trajectory, per flow.
pub fn bounds_cmd(
    file: &ScenarioFile,
    flow: Option<&str>,
    tolerance: Option<&Q>,
) -> Result<Outcome> {
    let scenario = file.to_scenario()?;
    let traj = simulate(&scenario);
    let tol = tolerance.unwrap_or(&file.tolerance).clone();
    let weights = scenario.weights();
    let total: Q = weights.iter().sum();
    let targets: Vec<usize> = match flow {
        Some(id) => {
            let id = flow_of_interest(file, Some(id))?;
            vec![scenario.flow_index(&id).expect("validated")]
        }
        None => (0..scenario.flows.len()).collect(),
    };
    let mut out = Outcome::default();
    for &j in &targets {
        let id = scenario.flows[j].id.clone();
        let s_j = leftover(&file.flows, &id, &file.curve).map_err(|e| anyhow!("{e}"))?;
        let strict = check_strict_service(&traj, j, &s_j, &tol).map_err(|e| anyhow!("{e}"))?;
        out.report(&format!("strict-service {id}"), &strict);

        let mut shares = BTreeMap::new();
        shares.insert(j, &weights[j] / &total);
        let th2 =
            check_departure_bound(&traj, &shares, &file.horizon, &tol).map_err(|e| anyhow!("{e}"))?;
        out.report(&format!("departure-bound {id}"), &th2);
        let cor = check_backlog_output_bounds(&traj, &shares, &Q::zero(), &file.horizon, &tol)
            .map_err(|e| anyhow!("{e}"))?;
        out.report(&format!("backlog-output-bounds {id}"), &cor);
    }
    Ok(out)
}

/// `verify`: the oracle cross-validation suite on this scenario.
pub fn verify_cmd(
    file: &ScenarioFile,
    seed: Option<u64>,
    tolerance: Option<&Q>,
) -> Result<Outcome> {
    let mut out = Outcome::default();
    let seed = seed.unwrap_or(file.seed);
    let tol = tolerance.unwrap_or(&file.tolerance).clone();
    let mut rng = sampling::rng(seed);
    let config = OracleConfig::default();
    let n = file.flows.len();

    // curve constructions against literal subset enumeration
    if n <= config.max_enum {
        let u = universal(&file.flows, &file.curve).map_err(|e| anyhow!("{e}"))?;
        let mut worst: Option<String> = None;
        let mut checked = 0;
        for _ in 0..60 {
            let t = sample_time(&mut rng, &file.horizon);
            let direct = universal_bruteforce(&file.flows, &file.curve, &t, &config)
                .map_err(|e| anyhow!("{e}"))?;
            if u.eval(&t) != direct {
                worst = Some(format!("mismatch at t = {}", to_decimal(&t, 12)));
                break;
            }
            checked += 1;
        }
        out.check(
            "universal-vs-bruteforce",
            worst.is_none(),
            worst.unwrap_or(format!("{checked} sampled times agree exactly")),
        );

        for f in &file.flows {
            let curve = leftover(&file.flows, &f.id, &file.curve).map_err(|e| anyhow!("{e}"))?;
            let mut worst: Option<String> = None;
            let mut checked = 0;
            for _ in 0..60 {
                let t = sample_time(&mut rng, &file.horizon);
                let direct = leftover_bruteforce(&file.flows, &file.curve, &f.id, &t, &config)
                    .map_err(|e| anyhow!("{e}"))?;
                if curve.eval(&t) != direct {
                    worst = Some(format!("mismatch at t = {}", to_decimal(&t, 12)));
                    break;
                }
                checked += 1;
            }
            out.check(
                &format!("leftover-vs-bruteforce {}", f.id),
                worst.is_none(),
                worst.unwrap_or(format!("{checked} sampled times agree exactly")),
            );
        }
    } else {
        out.summary.push(format!(
            "SKIP brute-force comparisons: {n} flows exceed the enumeration cap"
        ));
    }

    if !file.fully_specified() {
        out.summary
            .push("SKIP trajectory checks: not every flow declares arrivals".into());
        return Ok(out);
    }

    let scenario = file.to_scenario()?;
    let traj = simulate(&scenario);
    let weights = scenario.weights();

    let compliance = gps_compliance(&traj, &weights);
    out.report("gps-compliance", &compliance);

    let max_internal = traj.internal_event_counts().into_iter().max().unwrap_or(0);
    out.check(
        "event-count",
        max_internal <= n,
        format!("at most {max_internal} internal events per segment (flows: {n})"),
    );

    for (j, f) in scenario.flows.iter().enumerate() {
        let s_j = leftover(&file.flows, &f.id, &file.curve).map_err(|e| anyhow!("{e}"))?;
        let strict = check_strict_service(&traj, j, &s_j, &tol).map_err(|e| anyhow!("{e}"))?;
        out.report(&format!("strict-service {}", f.id), &strict);
    }

    let mut worst_bound: Option<String> = None;
    let mut bound_checks = 0;
    for _ in 0..20 {
        let members = sampling::random_subset(&mut rng, n);
        let shares = sampling::random_feasible_shares(&mut rng, &weights, &members);
        let t = sample_time(&mut rng, &file.horizon).min(file.horizon.clone());
        let s = &t * qr(rng.random_range(0..=4), 4);
        let th2 = check_departure_bound(&traj, &shares, &t, &tol).map_err(|e| anyhow!("{e}"))?;
        let cor = check_backlog_output_bounds(&traj, &shares, &s, &t, &tol).map_err(|e| anyhow!("{e}"))?;
        if !th2.pass() || !cor.pass() {
            worst_bound = Some(format!("violation at t = {}", to_decimal(&t, 12)));
            break;
        }
        bound_checks += 2;
    }
    out.check(
        "subset-bounds",
        worst_bound.is_none(),
        worst_bound.unwrap_or(format!("{bound_checks} random feasible-subset checks pass")),
    );

    // greedy/lazy scenarios saturate the leftover curves exactly
    let greedy_lazy = scenario.flows.iter().all(|f| {
        f.envelope
            .plf()
            .is_some_and(|e| f.arrivals.as_ref().is_some_and(|a| a.equivalent(e)))
    }) && file.process.equivalent(file.curve.plf());
    if greedy_lazy {
        let closed = gps_calculus::curves::greedy_lazy(&file.flows, &file.curve)
            .map_err(|e| anyhow!("{e}"))?;
        let mut tight = true;
        for event in &traj.events {
            for (departures, expected) in traj.departures.iter().zip(&closed) {
                if departures.eval(&event.time) != expected.eval(&event.time) {
                    tight = false;
                }
            }
        }
        out.check(
            "greedy-lazy-tightness",
            tight,
            "departures equal min(E, S) at every event time".into(),
        );
    }

    // step-size study: quartering the euler step must not worsen the gap
    let dt = &file.horizon / q(64);
    let coarse = backlog_gap(
        &traj,
        &simulate_euler(&scenario, &dt).map_err(|e| anyhow!("{e}"))?,
    );
    let fine = backlog_gap(
        &traj,
        &simulate_euler(&scenario, &(&dt / q(4))).map_err(|e| anyhow!("{e}"))?,
    );
    out.check(
        "euler-convergence",
        fine <= coarse * 1.25 + 1e-9,
        format!("sup-norm gap {coarse:.6} at dt vs {fine:.6} at dt/4"),
    );

    Ok(out)
}

fn sample_time(rng: &mut sampling::SeededRng, horizon: &Q) -> Q {
    horizon * qr(rng.random_range(1..=128), 64) // (0, 2*horizon]
}
