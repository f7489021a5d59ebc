//! One finite-horizon decision on a hand-built network state, compared across
//! horizons and against the baselines.

use agesched::control::PlantModel;
use agesched::penalty::{state_cost, PenaltyTable};
use agesched::scheduler::{Dedup, Policy, Scheduler};
use agesched::timing::{SamplingCalendar, TimingState};

fn main() -> agesched::Result<()> {
    let models = [1.0, 1.25, 1.5]
        .iter()
        .map(|&a| PlantModel::scalar(a, 1.0, 1.0, 1.0, 0.0))
        .collect::<agesched::Result<Vec<_>>>()?;
    let penalties = PenaltyTable::new(&models);
    let calendars = [
        SamplingCalendar::new(3, 0)?,
        SamplingCalendar::new(3, 1)?,
        SamplingCalendar::new(3, 2)?,
    ];
    // every sensor holds an undelivered sample
    let state = TimingState {
        t: 10,
        generated: vec![9, 10, 8],
        received: vec![6, 7, 5],
        utilized: vec![6, 7, 5],
    };
    let loss = [0.2, 0.4, 0.6];

    println!(
        "ages {:?}, C(s) = {:.4}",
        state.ages(&calendars),
        state_cost(&state, &calendars, &penalties)
    );
    for h in 1..=6 {
        let d = Scheduler::new(Policy::FiniteHorizon, h, Dedup::Parent)
            .decide(&state, &calendars, &penalties, &loss)?;
        println!(
            "fh H={h}: transmit {:>4}  J* = {:>9.4}  nodes = {}",
            d.action, d.predicted_cost, d.nodes_expanded
        );
    }
    for policy in [Policy::RoundRobin, Policy::MaxAoi] {
        let d = Scheduler::new(policy, 1, Dedup::Parent)
            .decide(&state, &calendars, &penalties, &loss)?;
        println!("{policy}: transmit {}", d.action);
    }
    Ok(())
}
