//! Deterministic CSV emission. All values render as decimals with 12
//! significant digits from exact rationals; infinite values render as
//! `inf`.

use gps_calculus::curves::{ServiceCurve, UniversalCurve};
use gps_calculus::rational::{to_decimal, Ext, Q};
use gps_calculus::simulator::Trajectory;

const SIG_DIGITS: u32 = 12;

pub fn render(v: &Q) -> String {
    to_decimal(v, SIG_DIGITS)
}

pub fn render_ext(v: &Ext) -> String {
    match v {
        Ext::Finite(x) => render(x),
        Ext::PosInf => "inf".into(),
        Ext::NegInf => "-inf".into(),
    }
}

/// Breakpoint table of a finite curve: `t,value,slope` with the slope in
/// force after `t`.
pub fn curve_table(curve: &ServiceCurve) -> String {
    let mut out = String::from("t,value,slope\n");
    let plf = curve.plf().canonical();
    for seg in plf.segments() {
        out.push_str(&format!(
            "{},{},{}\n",
            render(&seg.start),
            render(&plf.eval(&seg.start)),
            render(&seg.slope),
        ));
    }
    out
}

/// Breakpoint table of the universal curve; when the curve exhausts, a
/// final row records the first infinite instant.
pub fn universal_table(curve: &UniversalCurve) -> String {
    let mut out = String::from("t,value,slope\n");
    let plf = curve.finite_part().canonical();
    for seg in plf.segments() {
        if let Some(t0) = curve.infinite_from() {
            if &seg.start >= t0 {
                break;
            }
        }
        out.push_str(&format!(
            "{},{},{}\n",
            render(&seg.start),
            render(&plf.eval(&seg.start)),
            render(&seg.slope),
        ));
    }
    if let Some(t0) = curve.infinite_from() {
        out.push_str(&format!("{},inf,inf\n", render(t0)));
    }
    out
}

/// `t,value` rows for a curve evaluated on a grid.
pub fn sample_table(grid: &[Q], values: &[Ext]) -> String {
    assert_eq!(grid.len(), values.len());
    let mut out = String::from("t,value\n");
    for (t, v) in grid.iter().zip(values) {
        out.push_str(&format!("{},{}\n", render(t), render_ext(v)));
    }
    out
}

/// Trajectory table: `t,D_<id>...,B_<id>...` at the given instants.
pub fn trajectory_table(traj: &Trajectory, grid: &[Q]) -> String {
    let ids: Vec<&str> = traj
        .scenario
        .flows
        .iter()
        .map(|f| f.id.0.as_str())
        .collect();
    let mut out = String::from("t");
    for id in &ids {
        out.push_str(&format!(",D_{id}"));
    }
    for id in &ids {
        out.push_str(&format!(",B_{id}"));
    }
    out.push('\n');
    for t in grid {
        out.push_str(&render(t));
        for d in &traj.departures {
            out.push_str(&format!(",{}", render(&d.eval(t))));
        }
        for b in &traj.backlogs {
            out.push_str(&format!(",{}", render(&b.eval(t))));
        }
        out.push('\n');
    }
    out
}

/// Event log: `t,members_of_M(t)` with the non-backlogged flow ids joined
/// by semicolons.
pub fn events_table(traj: &Trajectory) -> String {
    let mut out = String::from("t,members_of_M(t)\n");
    for event in &traj.events {
        let members: Vec<&str> = event
            .idle
            .iter()
            .map(|&j| traj.scenario.flows[j].id.0.as_str())
            .collect();
        out.push_str(&format!("{},{}\n", render(&event.time), members.join(";")));
    }
    out
}

/// Default trajectory probe instants: input breakpoints, event times, and
/// the horizon.
pub fn default_trajectory_grid(traj: &Trajectory) -> Vec<Q> {
    let mut grid = traj.scenario.grid();
    grid.extend(traj.events.iter().map(|e| e.time.clone()));
    grid.sort();
    grid.dedup();
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use gps_calculus::curves::{Envelope, FlowSpec};
    use gps_calculus::plf::Plf;
    use gps_calculus::rational::{q, qr};
    use gps_calculus::simulator::{simulate, Scenario};

    #[test]
    fn sample_table_matches_contract() {
        let grid = vec![q(0), q(1), q(2)];
        let values = vec![Ext::Finite(q(0)), Ext::Finite(qr(1, 2)), Ext::Finite(q(1))];
        assert_eq!(sample_table(&grid, &values), "t,value\n0,0\n1,0.5\n2,1\n");
        assert_eq!(sample_table(&[], &[]), "t,value\n");
    }

    #[test]
    fn trajectory_table_has_one_column_per_flow() {
        let scenario = Scenario::new(
            vec![
                FlowSpec::new(
                    "a",
                    q(1),
                    Envelope::Unbounded,
                    Some(Plf::constant_rate(q(1))),
                )
                .unwrap(),
                FlowSpec::new("b", q(1), Envelope::Unbounded, Some(Plf::zero())).unwrap(),
            ],
            Plf::constant_rate(q(2)),
            q(2),
        )
        .unwrap();
        let traj = simulate(&scenario);
        let table = trajectory_table(&traj, &[q(0), q(1)]);
        let mut lines = table.lines();
        assert_eq!(lines.next(), Some("t,D_a,D_b,B_a,B_b"));
        assert_eq!(lines.next(), Some("0,0,0,0,0"));
        assert_eq!(lines.next(), Some("1,1,0,0,0"));
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(render(&qr(1, 3)), "0.333333333333");
        assert_eq!(render(&qr(1, 2)), "0.5");
    }
}
