//! Run the three distributed schemes on one snapshot and watch them converge.

use lapdiff::diffusion::{DelaySchedule, Diffusion, DiffusionConfig, Network};
use lapdiff::metrics::{max_pairwise_deviation, network_deviation};
use lapdiff::sensing::{differential_coords, points_to_matrix, sample_measurements};
use lapdiff::trajectory::{generate_fleet, FleetConfig};
use lapdiff::{cll_solve, Algorithm, NoiseConfig, VanetGraph};

fn main() -> lapdiff::Result<()> {
    let positions = generate_fleet(8, 1, 0.1, &FleetConfig::default(), 11)?.at(0).to_vec();
    let graph = VanetGraph::build(&positions, &Default::default())?;
    let weights = graph.metropolis_weights();
    let ms = sample_measurements(&positions, &graph, &NoiseConfig::default(), 5, 0)?;
    let dc = differential_coords(&ms, &graph)?;
    let s = dc.scaled(&graph);
    let gps = ms.gps_matrix();
    let truth = points_to_matrix(&positions);
    let cll = cll_solve(&graph, &dc, &gps)?.positions;
    println!("centralized deviation {:.3e}", lapdiff::metrics::normalized_deviation(&cll, &truth));

    let net = Network {
        graph: &graph,
        weights: &weights,
        measurements: &s,
    };
    for alg in Algorithm::ALL {
        let initial = vec![gps.clone(); graph.len()];
        let mut run = Diffusion::new(alg, net, initial, &DiffusionConfig::default(), DelaySchedule::undelayed())?;
        let mut curve = Vec::new();
        run.run(70, |k, agents| {
            if [1, 5, 20, 70].contains(&k) {
                curve.push((k, network_deviation(agents.iter().map(|a| &a.w), &truth)));
            }
        })?;
        let finals: Vec<_> = run.estimates().cloned().collect();
        let points: Vec<String> = curve.iter().map(|(k, d)| format!("k={k}: {d:.3e}")).collect();
        println!("{alg:<6} {} | spread {:.1e}", points.join(", "), max_pairwise_deviation(&finals));
    }
    Ok(())
}
