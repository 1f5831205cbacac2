//! Generate a fleet with the kinematic bicycle model and track its connectivity.

use lapdiff::trajectory::{generate_fleet, FleetConfig};
use lapdiff::VanetGraph;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fleet = generate_fleet(13, 500, 0.1, &FleetConfig::default(), 7)?;
    for t in (0..fleet.horizon()).step_by(100) {
        let graph = VanetGraph::build(fleet.at(t), &Default::default())?;
        let lambda2 = graph.algebraic_connectivity()?;
        println!(
            "t = {:>4.1} s: {} edges, mean degree {:.2}, lambda2 {:.3}",
            t as f64 * fleet.dt,
            graph.edge_count(),
            graph.mean_degree(),
            lambda2
        );
    }
    let path = std::env::temp_dir().join("lapdiff_fleet.csv");
    fleet.write_csv(std::fs::File::create(&path)?)?;
    println!("trace written to {}", path.display());
    Ok(())
}
