/*!
Per-flow strict service curves for Generalized Processor Sharing.

A GPS scheduler divides the capacity of a (possibly time-varying) link among
a set of flows in proportion to positive weights, serving each backlogged
flow at least its weighted share. This crate computes, exactly, the
best-possible strict service curve available to a single flow when the other
flows are bounded by concave arrival envelopes and the link is bounded from
below by a convex service curve. The system is not assumed to be stable.

The main pieces:

* [`plf`] — exact algebra on left-continuous nondecreasing piecewise-linear
  functions, the representation for every cumulative process and curve.
* [`maxmin`] — weighted max-min fair allocation: fair share, per-player
  shares, feasible subsets, feasible orderings.
* [`curves`] — envelopes, service curves, and the leftover/universal service
  curve constructions.
* [`simulator`] — exact event-driven GPS fluid simulation over piecewise
  linear inputs.
* [`bounds`] — departure, backlog, and output-burstiness bound checkers, and
  strict service curve verification against simulated trajectories.
* [`oracle`] — independent slow references (subset enumeration, fixed-step
  integration) used to validate the fast paths.
* [`sampling`] — seeded random instance generators for the verification
  suites.

All values are exact rationals ([`rational::Q`]); event times solve linear
equations, so rational arithmetic removes any event-ordering ambiguity.
*/

// error enums carry exact rationals by value; boxing them everywhere is not
// worth the indirection for APIs where errors are rare and small in count
#![allow(clippy::result_large_err)]
// index loops walk several parallel per-flow arrays at once
#![allow(clippy::needless_range_loop)]

pub mod bounds;
pub mod curves;
pub mod maxmin;
pub mod oracle;
pub mod plf;
pub mod rational;
pub mod sampling;
pub mod simulator;

pub use rational::{Ext, Q};
