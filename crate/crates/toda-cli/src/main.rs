//! `toda`: validate Lax points, evolve them along the hierarchy, and run the
//! identity-check suites.

mod config;
mod error;
mod report;
mod snapshot;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use toda_core::C64;

use crate::error::{CliError, CliResult};
use crate::report::ValidationReport;
use crate::suites::{Suite, SuiteOptions};

const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(name = "toda", version, about = "Extended dispersionless 2D Toda hierarchy toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report M1/M0 membership of every x-slice; exits 1 if the point is not in M1.
    Validate { config: PathBuf },
    /// Integrate one flow and write a snapshot with Hamiltonian drift.
    Evolve {
        config: PathBuf,
        /// Flow index as "alpha,p", e.g. "v,0" or "-1,1".
        #[arg(long, allow_hyphen_values = true)]
        flow: String,
        #[arg(long)]
        time: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an identity-check suite; exits 1 if any check fails.
    Check {
        #[arg(value_enum)]
        suite: Suite,
        config: PathBuf,
        /// Spectral parameter of the deformed connection, e.g. "0.3" or "0.3+0.1i".
        #[arg(long, default_value = "0.3", allow_hyphen_values = true, value_parser = parse_complex)]
        zeta: C64,
        /// Flat-index window A: indices -A..=A plus v and u.
        #[arg(long, default_value_t = 8)]
        window: i32,
        /// Replaces every default tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Overrides the seed from the configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Serialize)]
struct EvolveSummary<'a> {
    out: &'a std::path::Path,
    flow: &'a str,
    steps: usize,
    halvings: u32,
    structure_drift: f64,
    max_drift: f64,
    drift: &'a [snapshot::DriftEntry],
}

fn parse_complex(s: &str) -> Result<C64, String> {
    s.parse::<C64>().map_err(|_| format!("{s:?} is not a complex number"))
}

fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn init_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("TODA_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| CliError::Argument(format!("TODA_THREADS = {v:?} is not a count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Argument(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<bool> {
    init_threads()?;
    match cli.command {
        Command::Validate { config } => {
            let input = config::load(&config)?;
            let lp = &input.point;
            let report = ValidationReport::new(lp.n_modes(), lp.validate());
            print_json(&report)?;
            Ok(report.in_m1)
        }
        Command::Evolve { config, flow, time, dt, out } => {
            let input = config::load(&config)?;
            let snap = snapshot::run_evolve(&input, &flow, time, dt)?;
            snapshot::write(&snap, &out)?;
            print_json(&EvolveSummary {
                out: &out,
                flow: &snap.flow,
                steps: snap.steps,
                halvings: snap.halvings,
                structure_drift: snap.structure_drift,
                max_drift: snap.max_drift(),
                drift: &snap.drift,
            })?;
            Ok(true)
        }
        Command::Check { suite, config, zeta, window, tol, seed } => {
            if window < 1 {
                return Err(CliError::Argument(format!("window must be at least 1, got {window}")));
            }
            if let Some(t) = tol {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(CliError::Argument(format!("tolerance must be positive, got {t}")));
                }
            }
            let input = config::load(&config)?;
            let opts = SuiteOptions {
                zeta,
                window,
                tol,
                seed: seed.or(input.seed).unwrap_or(DEFAULT_SEED),
            };
            let report = suites::run_suite(suite, &input, opts)?;
            print_json(&report)?;
            Ok(report.pass)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
