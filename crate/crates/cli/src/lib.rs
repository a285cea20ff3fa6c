//! Scenario ingestion, command dispatch, and result emission for the
//! `gpscal` binary.
//!
//! Scenario files are UTF-8 JSON; rationals are written as decimal or
//! `"p/q"` strings (plain JSON integers are also accepted). Outputs are
//! deterministic CSV with values rendered to 12 significant digits from
//! exact rationals.

pub mod commands;
pub mod output;
pub mod scenario;

/// Exit status conventions: 0 all checks pass, 1 a bound or verification
/// failed, 2 usage or scenario errors.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
