use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use gpscal::commands::{self, Outcome};
use gpscal::scenario::{self, ScenarioFile};
use gpscal::{EXIT_PASS, EXIT_USAGE, EXIT_VIOLATION};
use std::path::PathBuf;
use std::process::ExitCode;

/// Per-flow strict service curves under GPS: curve computation, exact fluid
/// simulation, and bound verification.
#[derive(Parser)]
#[command(name = "gpscal", version, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON)
    scenario: PathBuf,
    /// Write CSV artifacts into this directory instead of stdout
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Leftover (per-flow strict) service curve as a breakpoint table
    Leftover {
        #[command(flatten)]
        common: Common,
        /// Flow of interest
        #[arg(long)]
        flow: Option<String>,
    },
    /// Universal service curve as a breakpoint table
    Universal {
        #[command(flatten)]
        common: Common,
    },
    /// Exact event-driven trajectory and event log
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Probe instants: `t0:t1:step` or a comma-separated list
        #[arg(long)]
        grid: Option<String>,
    },
    /// Strict-service, departure, backlog, and output bounds on the
    /// simulated trajectory
    Bounds {
        #[command(flatten)]
        common: Common,
        /// Restrict to one flow (default: all flows)
        #[arg(long)]
        flow: Option<String>,
        /// Slack tolerance (rational)
        #[arg(long, allow_hyphen_values = true)]
        tolerance: Option<String>,
    },
    /// Oracle cross-validation suite on this scenario
    Verify {
        #[command(flatten)]
        common: Common,
        /// Seed for the randomized checks
        #[arg(long)]
        seed: Option<u64>,
        /// Slack tolerance (rational)
        #[arg(long, allow_hyphen_values = true)]
        tolerance: Option<String>,
    },
    /// Curve values on an evaluation grid
    Sample {
        #[command(flatten)]
        common: Common,
        /// Flow of interest (leftover curve); omit for the universal curve
        #[arg(long)]
        flow: Option<String>,
        /// Evaluation grid: `t0:t1:step` or a comma-separated list
        #[arg(long)]
        grid: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_USAGE as u8)
        }
    }
}

fn load(common: &Common) -> Result<ScenarioFile> {
    scenario::parse_scenario(&common.scenario)
}

fn parse_tolerance(flag: &Option<String>) -> Result<Option<gps_calculus::rational::Q>> {
    match flag {
        None => Ok(None),
        Some(s) => Ok(Some(gps_calculus::rational::parse_rational(s)?)),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let (common, outcome) = match &cli.command {
        Command::Leftover { common, flow } => (
            common,
            commands::leftover_cmd(&load(common)?, flow.as_deref())?,
        ),
        Command::Universal { common } => (common, commands::universal_cmd(&load(common)?)?),
        Command::Simulate { common, grid } => (
            common,
            commands::simulate_cmd(&load(common)?, grid.as_deref())?,
        ),
        Command::Bounds {
            common,
            flow,
            tolerance,
        } => {
            let tol = parse_tolerance(tolerance)?;
            (
                common,
                commands::bounds_cmd(&load(common)?, flow.as_deref(), tol.as_ref())?,
            )
        }
        Command::Verify {
            common,
            seed,
            tolerance,
        } => {
            let tol = parse_tolerance(tolerance)?;
            (
                common,
                commands::verify_cmd(&load(common)?, *seed, tol.as_ref())?,
            )
        }
        Command::Sample { common, flow, grid } => (
            common,
            commands::sample_cmd(&load(common)?, flow.as_deref(), grid.as_deref())?,
        ),
    };
    emit(common, &outcome)?;
    Ok(if outcome.failed {
        ExitCode::from(EXIT_VIOLATION as u8)
    } else {
        ExitCode::from(EXIT_PASS as u8)
    })
}

fn emit(common: &Common, outcome: &Outcome) -> Result<()> {
    match &common.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            for (name, contents) in &outcome.artifacts {
                std::fs::write(dir.join(name), contents)?;
            }
        }
        None => {
            for (name, contents) in &outcome.artifacts {
                println!("# {name}");
                print!("{contents}");
            }
        }
    }
    for line in &outcome.summary {
        println!("{line}");
    }
    Ok(())
}
