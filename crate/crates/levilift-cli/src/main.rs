//! Scenario-driven command line driver.
//!
//! Exit codes: 0 = all checks pass, 1 = a mathematical check failed,
//! 2 = input, parse, or precision error.

use clap::{Parser, Subcommand, ValueEnum};
use levilift::lifting::ChoiceStrategy;
use levilift::ops::{
    cmd_check_refactor, cmd_eval_theta, cmd_lift, cmd_lift_single, cmd_restrict, cmd_roundtrip,
    cmd_validate, CommandReport,
};
use levilift::rat::parse_rat;
use levilift::scenario::{load_strategy, Scenario};
use levilift::Error;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "levi-lift")]
#[command(about = "lift semisimple character data from a fixed-point group, exactly")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Parser)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,

    /// Report format.
    #[arg(long, value_enum, default_value = "text")]
    output: Output,

    /// Override the scenario's digit precision (also: LEVILIFT_PRECISION).
    #[arg(long)]
    precision: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the datum conditions and, for ambient-side data, Γ-stability.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Lift a fixed-side datum to a Γ-stable datum for the full group.
    Lift {
        #[command(flatten)]
        common: Common,
        /// Stop depth for single-character data (rational "a/b").
        #[arg(long)]
        target_depth: Option<String>,
        /// Scripted per-step overrides (JSON).
        #[arg(long)]
        strategy: Option<PathBuf>,
    },
    /// Lift a single-character fixed-side datum down to a target depth.
    LiftSingle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        target_depth: Option<String>,
        #[arg(long)]
        strategy: Option<PathBuf>,
    },
    /// Restrict a Γ-stable ambient-side datum to the fixed-point side.
    Restrict {
        #[command(flatten)]
        common: Common,
    },
    /// Restrict and replay: the datum must reproduce itself as a lift.
    Roundtrip {
        #[command(flatten)]
        common: Common,
    },
    /// Check that the scenario's second datum is a refactorization of the first.
    CheckRefactor {
        #[command(flatten)]
        common: Common,
    },
    /// Compare semisimple-character values on pseudo-random arguments.
    EvalTheta {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load_scenario(common: &Common) -> Result<Scenario, Error> {
    let precision = match common.precision {
        Some(p) => Some(p),
        None => match std::env::var("LEVILIFT_PRECISION") {
            Ok(v) => Some(v.parse().map_err(|_| {
                Error::Scenario(format!("LEVILIFT_PRECISION must be an integer, found `{v}`"))
            })?),
            Err(_) => None,
        },
    };
    let text = std::fs::read_to_string(&common.scenario)?;
    Scenario::from_json(&text, precision)
}

fn strategy_for(scn: &Scenario, path: &Option<PathBuf>) -> Result<ChoiceStrategy, Error> {
    match path {
        None => Ok(ChoiceStrategy::Canonical),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            load_strategy(&scn.frame, &text)
        }
    }
}

fn emit(report: &CommandReport, output: Output, elapsed_ms: u128) -> ExitCode {
    match output {
        Output::Json => {
            println!("{}", serde_json::to_string_pretty(report).expect("serialize report"));
        }
        Output::Text => {
            println!(
                "{} `{}`: {}",
                report.command,
                report.scenario,
                if report.pass { "PASS" } else { "FAIL" }
            );
            for check in &report.checks {
                match (&check.pass, &check.witness) {
                    (true, _) => println!("  ok   {}", check.name),
                    (false, Some(w)) => println!("  FAIL {} ({w})", check.name),
                    (false, None) => println!("  FAIL {}", check.name),
                }
            }
            for note in &report.notes {
                println!("  note {note}");
            }
            if let Some(datum) = &report.produced_datum {
                println!(
                    "  produced datum: levis {:?}, depths {:?}",
                    datum
                        .levis
                        .iter()
                        .map(|l| format!("{l:?}"))
                        .collect::<Vec<_>>(),
                    datum.depths
                );
            }
            if !report.audit.is_empty() {
                println!("  audit trail: {} steps", report.audit.len());
            }
            println!("  elapsed: {elapsed_ms} ms");
        }
    }
    ExitCode::from(report.exit_code() as u8)
}

fn run() -> Result<ExitCode, Error> {
    let cli = Cli::parse();
    let start = Instant::now();
    let (report, output) = match &cli.command {
        Command::Validate { common } => {
            let scn = load_scenario(common)?;
            (cmd_validate(&scn)?, common.output)
        }
        Command::Lift {
            common,
            target_depth,
            strategy,
        } => {
            let scn = load_scenario(common)?;
            let s = target_depth.as_deref().map(parse_rat).transpose()?;
            let strat = strategy_for(&scn, strategy)?;
            (cmd_lift(&scn, s, strat)?, common.output)
        }
        Command::LiftSingle {
            common,
            target_depth,
            strategy,
        } => {
            let scn = load_scenario(common)?;
            let s = target_depth.as_deref().map(parse_rat).transpose()?;
            let strat = strategy_for(&scn, strategy)?;
            (cmd_lift_single(&scn, s, strat)?, common.output)
        }
        Command::Restrict { common } => {
            let scn = load_scenario(common)?;
            (cmd_restrict(&scn)?, common.output)
        }
        Command::Roundtrip { common } => {
            let scn = load_scenario(common)?;
            (cmd_roundtrip(&scn)?, common.output)
        }
        Command::CheckRefactor { common } => {
            let scn = load_scenario(common)?;
            (cmd_check_refactor(&scn)?, common.output)
        }
        Command::EvalTheta {
            common,
            samples,
            seed,
        } => {
            let scn = load_scenario(common)?;
            (cmd_eval_theta(&scn, *samples, *seed)?, common.output)
        }
    };
    Ok(emit(&report, output, start.elapsed().as_millis()))
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            // internal invariant violations indicate a failed mathematical
            // contract; everything else is an input or precision problem
            if matches!(e, Error::Internal(_)) {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
