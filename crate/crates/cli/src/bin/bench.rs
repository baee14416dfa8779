use anyhow::Result;
use clap::{Parser, Subcommand};
use cobra_cli::{format_aggregate, parse_counts, run_single, SingleRun};
use cobra_core::Algorithm;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bench", about = "Batch experiments for COBRA and the ORCA baseline")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a benchmark suite and write raw and aggregate CSVs.
    Run {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the suite's master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print the validity report of a scenario's infrastructure.
    Validate { scenario: PathBuf },
    /// Planning time per fleet size.
    Scaling {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value = "2,4,8,16")]
        ns: String,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run one scenario.
    Sim {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        robots: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = parse_algorithm)]
        algorithm: Option<Algorithm>,
        /// Also write per-tick positions and the token event log.
        #[arg(long)]
        trace: bool,
    },
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    serde_json::from_value(serde_json::Value::String(s.to_lowercase())).map_err(|_| format!("unknown algorithm {s:?}"))
}

fn main() -> Result<ExitCode> {
    let violations = match Cli::parse().cmd {
        Cmd::Run { suite, out, seed, jobs } => {
            let report = cobra_cli::run_suite(&suite, &out, seed, jobs)?;
            print!("{}", format_aggregate(&report));
            println!("wrote {}", out.display());
            report.monitor_violations()
        }
        Cmd::Validate { scenario } => {
            let report = cobra_cli::validate(&scenario)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            0
        }
        Cmd::Scaling { map, ns, repetitions, seed } => {
            let report = cobra_cli::scaling(&map, &parse_counts(&ns)?, repetitions, seed)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            0
        }
        Cmd::Sim { scenario, out, robots, seed, algorithm, trace } => {
            run_single(&SingleRun { scenario: &scenario, out: &out, robots, seed, algorithm, trace })?
        }
    };
    if violations > 0 {
        eprintln!("{violations} monitor violations");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}
