//! Command-line front end. Exit codes: 0 success, 1 invalid input, 2 runtime failure.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use agesched::config::{load_config, ExperimentSpec};
use agesched::hopdist::{pmf, HopChain};
use agesched::penalty::PenaltyTable;
use agesched::scheduler::{Policy, Scheduler};
use agesched::sweep::run_sweep;
use agesched::timing::{SamplingCalendar, TimingState};
use agesched::Error;

#[derive(Parser)]
#[command(
    name = "agesched",
    version,
    about = "Age-aware scheduling of networked control loops"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured sweep and write CSVs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// One scheduling decision for the state in a JSON file.
    Decide {
        #[arg(long)]
        config: PathBuf,
        /// JSON with `t`, `generated`, `received`, `utilized`, `offsets`, `loss`
        /// and optional `policy` and `horizon`.
        #[arg(long)]
        state: PathBuf,
        /// Write the decision JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Age PMF over a chain of lossy hops as `delta,pmf` rows.
    Hopdist {
        /// Per-hop loss probabilities, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        loss: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        max_delta: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a config file.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Deserialize)]
struct DecisionRequest {
    #[serde(flatten)]
    state: TimingState,
    offsets: Vec<i64>,
    loss: Vec<f64>,
    policy: Option<String>,
    horizon: Option<usize>,
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

fn invalid(e: impl ToString) -> Failure {
    Failure::Invalid(e.to_string())
}

fn runtime(e: impl ToString) -> Failure {
    Failure::Runtime(e.to_string())
}

fn load(config: &PathBuf) -> Result<ExperimentSpec, Failure> {
    load_config(config).map_err(|e| invalid(format!("{}: {e}", config.display())))
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(runtime),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(runtime),
    }
}

fn decide(spec: &ExperimentSpec, req: DecisionRequest) -> Result<String, Failure> {
    let n = spec.base.subsystems.len();
    let lens = [
        req.state.generated.len(),
        req.state.received.len(),
        req.state.utilized.len(),
        req.offsets.len(),
        req.loss.len(),
    ];
    if lens.iter().any(|&l| l != n) {
        return Err(invalid(format!(
            "state vectors must have length {n}, got {lens:?}"
        )));
    }
    if !req.state.is_ordered() {
        return Err(invalid("state violates t_u <= t_r <= t_g <= t"));
    }
    if req.loss.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(invalid("loss probabilities must lie in [0, 1]"));
    }
    let calendars = spec
        .base
        .subsystems
        .iter()
        .zip(&req.offsets)
        .map(|(s, &o)| SamplingCalendar::new(s.period, o))
        .collect::<agesched::Result<Vec<_>>>()
        .map_err(invalid)?;
    let policy = match &req.policy {
        Some(id) => id.parse::<Policy>().map_err(invalid)?,
        None => spec.policies[0],
    };
    if policy == Policy::Random {
        return Err(invalid("the random policy has no one-shot decision"));
    }
    let horizon = req.horizon.unwrap_or(spec.horizons[0]);
    let penalties = PenaltyTable::new(&spec.base.models());
    let decision = Scheduler::new(policy, horizon, spec.base.dedup)
        .decide(&req.state, &calendars, &penalties, &req.loss)
        .map_err(|e| match e {
            Error::InadmissibleAction { .. } | Error::InvalidParameter { .. } => invalid(e),
            other => runtime(other),
        })?;
    let json = serde_json::json!({
        "action": decision.action.to_string(),
        "predicted_cost": decision.predicted_cost,
        "nodes_expanded": decision.nodes_expanded,
    });
    Ok(format!("{json:#}\n"))
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run {
            config,
            seed,
            out,
            threads,
        } => {
            let mut spec = load(&config)?;
            if let Some(seed) = seed {
                spec.base.seed = seed;
            }
            if let Some(out) = out {
                spec.out_dir = out;
            }
            if threads == Some(0) {
                return Err(invalid("--threads must be >= 1"));
            }
            let output = run_sweep(&spec, threads).map_err(runtime)?;
            println!(
                "{} rows, {} summary rows written to {}",
                output.rows.len(),
                output.summary.len(),
                spec.out_dir.display()
            );
            Ok(())
        }
        Command::Decide { config, state, out } => {
            let spec = load(&config)?;
            let text = fs::read_to_string(&state).map_err(invalid)?;
            let req: DecisionRequest = serde_json::from_str(&text).map_err(invalid)?;
            emit(out.as_ref(), &decide(&spec, req)?)
        }
        Command::Hopdist {
            loss,
            max_delta,
            out,
        } => {
            let chain = HopChain::new(loss).map_err(invalid)?;
            let mut text = String::from("delta,pmf\n");
            for d in 0..=max_delta {
                text.push_str(&format!("{d},{}\n", pmf(&chain, d)));
            }
            emit(out.as_ref(), &text)
        }
        Command::Validate { config } => {
            let spec = load(&config)?;
            println!(
                "ok: {} sub-systems, {} cells, {} repetitions of {} slots",
                spec.base.subsystems.len(),
                spec.policies.len() * spec.horizons.len(),
                spec.base.repetitions,
                spec.base.slots
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
