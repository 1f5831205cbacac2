//! Per-vehicle step sizes and the stability bounds behind them.

use lapdiff::diffusion::{gllme_sufficient_bound, StepSizeRule, StepSizes};
use lapdiff::VanetGraph;

fn main() -> lapdiff::Result<()> {
    // A hub with five spokes plus a short tail.
    let graph = VanetGraph::from_edges(8, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (5, 6), (6, 7)])?;
    let weights = graph.metropolis_weights();
    let optimal = StepSizes::compute(&graph, &weights, StepSizeRule::Optimal);
    let bound = StepSizes::compute(&graph, &weights, StepSizeRule::Bound);
    println!("{:>3} {:>6} {:>8} {:>8} {:>10}", "i", "degree", "mu_lms", "mu_exch", "exch bound");
    for i in 0..graph.len() {
        println!(
            "{i:>3} {:>6} {:>8.4} {:>8.4} {:>10.4}",
            graph.degree(i),
            optimal.mu1[i].unwrap_or(0.0),
            optimal.mu2[i].unwrap_or(0.0),
            gllme_sufficient_bound(&graph, i).unwrap_or(0.0),
        );
    }
    let lms: Vec<String> = bound.mu1.iter().map(|m| format!("{:.3}", m.unwrap_or(0.0))).collect();
    println!("uncapped LMS bounds 2/(d^2 + d): {}", lms.join(" "));
    Ok(())
}
