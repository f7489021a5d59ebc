//! Runs the shipped evaluation config at reduced scale and prints per-horizon
//! MSE and age, the numbers behind the MSE and AoI versus horizon plots.
//!
//! `cargo run --release --example evaluation_scenario -- [slots] [reps] [out_dir]`

use agesched::config::ExperimentSpec;
use agesched::scheduler::Policy;
use agesched::sweep::{execute, write_outputs, NETWORK};

fn main() -> agesched::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut spec = ExperimentSpec::evaluation();
    spec.base.slots = args.first().and_then(|a| a.parse().ok()).unwrap_or(3000);
    spec.base.repetitions = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(8);
    spec.policies = vec![Policy::FiniteHorizon];
    spec.horizons = vec![1, 2, 3, 4];

    let out = execute(&spec, None)?;
    println!(
        "{:>2} {:>8} {:>24} {:>8} {:>8}",
        "H", "sub", "MSE (±95%)", "AoI", "nodes"
    );
    for s in &out.summary {
        println!(
            "{:>2} {:>8} {:>14.3} ± {:<7.3} {:>8.3} {:>8.1}",
            s.horizon, s.subsystem, s.mse_mean, s.mse_ci_half, s.aoi_mean, s.nodes_mean
        );
        if s.subsystem == NETWORK {
            println!();
        }
    }
    if let Some(dir) = args.get(2) {
        write_outputs(&spec, &out, dir.as_ref())?;
        println!("CSVs written to {dir}");
    }
    Ok(())
}
