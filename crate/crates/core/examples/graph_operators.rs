//! Build a VANET graph from positions and inspect its operators.

use lapdiff::{GraphConfig, Point, VanetGraph};

fn main() -> lapdiff::Result<()> {
    let positions = [(0.0, 0.0), (9.0, 2.0), (17.0, -1.0), (4.0, 11.0), (14.0, 12.0), (40.0, 40.0)]
        .map(|(x, y)| Point::new(x, y));
    let graph = VanetGraph::build(&positions, &GraphConfig::default())?;

    println!("edges: {:?}", graph.edges().collect::<Vec<_>>());
    println!("mean degree {:.2}, connected: {}", graph.mean_degree(), graph.is_connected());
    println!("Laplacian:{}", graph.laplacian());
    println!("Metropolis weights:{:.3}", graph.metropolis_weights().as_matrix());
    println!("spectrum: {:.4?}", graph.laplacian_spectrum());

    let platoon = graph.component_of(0);
    let sub = graph.subgraph(&platoon);
    println!("component of vehicle 0: {platoon:?}, lambda2 = {:.4}", sub.algebraic_connectivity()?);

    // A tighter neighbor cap prunes edges symmetrically.
    let capped = VanetGraph::build(&positions, &GraphConfig { max_neighbors: 2, ..Default::default() })?;
    println!("with N_max = 2: {} edges instead of {}", capped.edge_count(), graph.edge_count());
    Ok(())
}
