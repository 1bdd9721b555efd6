//! `uclab`: run scenarios, invariant suites and capacity computations.
//!
//! Exit codes: 0 on success, 1 when an invariant fails, 2 on a
//! configuration error.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;
use uclab::capacity::blahut_arimoto;
use uclab::channels::exact::{block_kernel, point_belief};
use uclab::checks::{run_suites, CheckOutcome};
use uclab::harness::{report_csv, run_experiment, ChannelConfig, Scenario};
use uclab::Error;

#[derive(Parser)]
#[command(name = "uclab", version, about = "Universal communication over unknown causal channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its CSV report to the output directory.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated seeds replacing the scenario's list.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Run an invariant suite by name, or all of them.
    Check {
        #[arg(long)]
        suite: String,
    },
    /// Capacity of a channel described by a TOML file.
    Capacity {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Block length for channels with memory: the capacity of the
        /// block kernel from the initial state.
        #[arg(long, default_value_t = 1)]
        block: usize,
    },
}

/// Failure classes mapped to exit codes.
enum Failure {
    Invariant(String),
    Config(String),
}

impl From<Error> for Failure {
    /// Errors traceable to user input (files, settings, the enumeration
    /// cap) are configuration errors; anything else means a computation
    /// broke an invariant.
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Io(_) | Error::Overflow { .. } | Error::NTooSmall { .. } => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Invariant(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = check_env().and_then(|()| match cli.command {
        Command::Run {
            scenario,
            out,
            seeds,
            jobs,
        } => run(scenario, out, seeds, jobs),
        Command::Check { suite } => check(&suite),
        Command::Capacity { channel, tol, block } => capacity(channel, tol, block),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Invariant(msg) => eprintln!("invariant failure: {msg}"),
                Failure::Config(msg) => eprintln!("error: {msg}"),
            }
            ExitCode::from(f.code())
        }
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invariant(_) => 1,
            Failure::Config(_) => 2,
        }
    }
}

fn check_env() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("UCLAB_ENUM_CAP") {
        match v.trim().parse::<u64>() {
            Ok(n) if n > 0 => {}
            _ => return Err(Failure::Config(format!("UCLAB_ENUM_CAP must be a positive integer, got `{v}`"))),
        }
    }
    Ok(())
}

fn run(path: PathBuf, out: Option<PathBuf>, seeds: Option<Vec<u64>>, jobs: usize) -> Result<(), Failure> {
    let scenario = Scenario::load(&path).map_err(|e| Failure::Config(e.to_string()))?;
    let dir = out
        .or_else(|| scenario.output.as_ref().map(PathBuf::from))
        .ok_or_else(|| Failure::Config("no output directory: pass --out or set `output`".into()))?;
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))?;
    let report = run_experiment(&scenario, seeds.as_deref(), jobs)?;
    let file = dir.join(format!("{}.csv", scenario.name));
    report_csv(&report, &file).map_err(|e| Failure::Config(e.to_string()))?;
    for r in &report.runs {
        println!(
            "seed {:>4}  overall {:.4} bits/symbol  final epoch {:.4}  error {}",
            r.seed,
            r.result.overall_rate,
            r.result.final_epoch().rate_per_symbol(),
            r.result.error
        );
    }
    print_checks(&report.checks);
    println!("wrote {}", file.display());
    if report.all_checks_pass() {
        Ok(())
    } else {
        Err(Failure::Invariant(format!("scenario {} failed a run invariant", scenario.name)))
    }
}

fn print_checks(checks: &[CheckOutcome]) {
    for c in checks {
        println!(
            "{} {:<18} {:>7} instances  {:>9.2?}  {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.suite,
            c.instances,
            c.elapsed,
            c.detail
        );
    }
}

fn check(suite: &str) -> Result<(), Failure> {
    let outcomes = run_suites(suite)?;
    print_checks(&outcomes);
    let failed: Vec<&str> = outcomes.iter().filter(|c| !c.passed).map(|c| c.suite.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invariant(format!("failed: {}", failed.join(", "))))
    }
}

#[derive(Deserialize)]
struct ChannelFile {
    channel: ChannelConfig,
}

fn capacity(path: PathBuf, tol: f64, block: usize) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let cfg: ChannelConfig = match toml::from_str::<ChannelFile>(&text) {
        Ok(f) => f.channel,
        Err(_) => toml::from_str(&text).map_err(|e| Failure::Config(e.to_string()))?,
    };
    if !(tol > 0.0) || block == 0 {
        return Err(Failure::Config("tol and block must be positive".into()));
    }
    let model = cfg.build().map_err(|e| Failure::Config(e.to_string()))?;
    let belief = point_belief(model.state_count(), model.initial_state());
    let kernel = block_kernel(model.as_ref(), 0, &belief, block, 0)?;
    let r = blahut_arimoto(&kernel, tol)?;
    println!("channel      {}", model.name());
    println!("block        {block}");
    println!("capacity     {:.12} bits per block", r.capacity);
    println!("per symbol   {:.12} bits", r.capacity / block as f64);
    println!("iterations   {}", r.iterations);
    println!("gap bound    {:e}", r.gap_bound);
    let prior: Vec<String> = r.prior.probs().iter().map(|p| format!("{p:.6}")).collect();
    println!("prior        [{}]", prior.join(", "));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_exit_codes() {
        let code = |e: Error| Failure::from(e).code();
        assert_eq!(code(Error::Config("x".into())), 2);
        assert_eq!(code(Error::Overflow { what: "x".into(), cap: 1 }), 2);
        assert_eq!(code(Error::NTooSmall { n: 1, min: 64 }), 2);
        assert_eq!(code(Error::NonConvergence { iterations: 1, gap: 1.0 }), 1);
        assert_eq!(code(Error::BudgetExceeded { requested: 2, available: 1 }), 1);
    }
}
