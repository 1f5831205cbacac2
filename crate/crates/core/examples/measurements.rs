//! Sample GPS and range readings, then form differential coordinates.

use lapdiff::sensing::{differential_coords, points_to_matrix, sample_measurements};
use lapdiff::{NoiseConfig, Point, VanetGraph};

fn main() -> lapdiff::Result<()> {
    let positions = [(100.0, 50.0), (108.0, 53.0), (115.0, 49.0), (104.0, 60.0)].map(|(x, y)| Point::new(x, y));
    let graph = VanetGraph::build(&positions, &Default::default())?;
    let truth = points_to_matrix(&positions);

    let exact = sample_measurements(&positions, &graph, &NoiseConfig::noiseless(), 0, 0)?;
    let dc = differential_coords(&exact, &graph)?;
    let gap = (graph.laplacian() * &truth - dc.scaled(&graph)).amax();
    println!("noise-free: max |L x - D delta| = {gap:.2e}");

    let noisy = sample_measurements(&positions, &graph, &NoiseConfig::default(), 42, 0)?;
    for m in noisy.from_vehicle(0) {
        println!(
            "0 -> {}: range {:.2} m, azimuth {:.1} deg",
            m.to,
            m.distance,
            m.azimuth.to_degrees()
        );
    }
    for (i, (z, p)) in noisy.gps.iter().zip(&positions).enumerate() {
        println!("vehicle {i}: GPS error {:.2} m", (z - p).norm());
    }
    let dc = differential_coords(&noisy, &graph)?;
    println!("delta_x = {:.3}", dc.delta_x.transpose());
    println!("delta_y = {:.3}", dc.delta_y.transpose());
    Ok(())
}
