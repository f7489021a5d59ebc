//! Every policy on the same channel, noise and offset realizations.
//!
//! `cargo run --release --example policy_comparison -- [slots] [reps] [horizon]`

use agesched::scheduler::Policy;
use agesched::sim::{evaluation_scenario, run, summarize};

fn main() -> agesched::Result<()> {
    let args: Vec<u64> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let slots = args.first().copied().unwrap_or(3000);
    let reps = args.get(1).copied().unwrap_or(8);
    let horizon = args.get(2).copied().unwrap_or(3) as usize;

    println!(
        "{:>12} {:>18} {:>10} {:>10}",
        "policy", "network MSE", "AoI", "diverged"
    );
    for policy in Policy::ALL {
        let mut cfg = evaluation_scenario(horizon, slots, reps, 11);
        cfg.policy = policy;
        let runs = (0..reps)
            .map(|r| run(&cfg, r))
            .collect::<agesched::Result<Vec<_>>>()?;
        let s = summarize(&runs)?;
        println!(
            "{:>12} {:>9.3} ± {:<6.3} {:>10.3} {:>10}",
            policy.id(),
            s.network_mse.mean,
            s.network_mse.ci_half,
            s.network_aoi.mean,
            s.diverged
        );
    }
    Ok(())
}
