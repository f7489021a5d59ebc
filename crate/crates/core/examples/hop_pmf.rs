//! Age PMF over one to four lossy hops: closed form against convolution, and
//! the mean age against the sum of per-hop geometric means.

use agesched::hopdist::{mean_age, pmf_closed, pmf_oracle, HopChain};

fn main() -> agesched::Result<()> {
    let chains = [
        vec![0.5],
        vec![0.5, 0.25],
        vec![0.5, 0.25, 0.125],
        vec![0.3, 0.3],
        vec![0.1, 0.2, 0.3, 0.4],
    ];
    for loss in chains {
        let chain = HopChain::new(loss.clone())?;
        let expected: f64 = loss.iter().map(|p| p / (1.0 - p)).sum();
        println!(
            "p = {loss:?}: E[Δ] = {:.6} (Σ p/(1-p) = {expected:.6})",
            mean_age(&chain, 1e-12)?
        );
        if let Err(e) = pmf_closed(&chain, 0) {
            println!("  closed form unavailable: {e}");
        }
        for d in 0..5 {
            let closed =
                pmf_closed(&chain, d).map_or_else(|_| "-".to_string(), |v| format!("{v:.10}"));
            println!(
                "  δ={d}  oracle {:.10}  closed {closed}",
                pmf_oracle(&chain, d)
            );
        }
    }
    Ok(())
}
