//! Mean tree size per decision versus horizon, against the worst case.
//!
//! `cargo run --release --example tree_growth -- [slots] [reps] [max_h] [min_h]`

use agesched::scheduler::{worst_case_nodes, Dedup};
use agesched::sim::{evaluation_scenario, run};

fn main() -> agesched::Result<()> {
    let args: Vec<u64> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let slots = args.first().copied().unwrap_or(2000);
    let reps = args.get(1).copied().unwrap_or(4);
    let max_h = args.get(2).copied().unwrap_or(5) as usize;
    let min_h = args.get(3).copied().unwrap_or(1) as usize;

    println!("H,dedup,nodes_mean,worst_case,reduction");
    for h in min_h..=max_h {
        for dedup in [Dedup::Parent, Dedup::Level] {
            let mut cfg = evaluation_scenario(h, slots, reps, 7);
            cfg.dedup = dedup;
            let mut total = 0.0;
            for rep in 0..reps {
                total += run(&cfg, rep)?.nodes_mean();
            }
            let mean = total / reps as f64;
            let wc = worst_case_nodes(cfg.subsystems.len() as u64, h as u32) as f64;
            println!("{h},{dedup:?},{mean:.2},{wc},{:.3}", 1.0 - mean / wc);
        }
    }
    Ok(())
}
