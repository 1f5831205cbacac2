//! Solve the anchored Laplacian system for one snapshot and compare with GPS.

use lapdiff::sensing::{differential_coords, points_to_matrix, sample_measurements};
use lapdiff::trajectory::{generate_fleet, FleetConfig};
use lapdiff::{cll_solve, NoiseConfig, VanetGraph};

fn main() -> lapdiff::Result<()> {
    let positions = generate_fleet(13, 1, 0.1, &FleetConfig::default(), 3)?.at(0).to_vec();
    let graph = VanetGraph::build(&positions, &Default::default())?;
    let truth = points_to_matrix(&positions);
    let n = positions.len() as f64;

    let mut gps_total = 0.0;
    let mut cll_total = 0.0;
    let trials = 200;
    for seed in 0..trials {
        let ms = sample_measurements(&positions, &graph, &NoiseConfig::default(), seed, 0)?;
        let dc = differential_coords(&ms, &graph)?;
        let gps = ms.gps_matrix();
        let sol = cll_solve(&graph, &dc, &gps)?;
        gps_total += (&gps - &truth).norm_squared() / n;
        cll_total += (&sol.positions - &truth).norm_squared() / n;
    }
    let (gps, cll) = (gps_total / trials as f64, cll_total / trials as f64);
    println!("mean squared error per vehicle: GPS {gps:.2} m^2, centralized {cll:.2} m^2");
    println!("reduction {:.1}%", 100.0 * (1.0 - cll / gps));
    Ok(())
}
