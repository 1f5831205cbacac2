//! Sweep the neighbor cap and write a directory of CSV results.

use lapdiff::output::write_sweep;
use lapdiff::{run_sweep, Method, ScenarioConfig};

fn main() -> lapdiff::Result<()> {
    let base = ScenarioConfig {
        horizon: 150,
        algorithms: vec![Method::Cll, Method::Gllme],
        ..Default::default()
    };
    let values: Vec<String> = ["2", "4", "6", "10"].map(String::from).to_vec();
    let runs = run_sweep(&base, "n_max", &values)?;
    for (value, (_, record)) in values.iter().zip(&runs) {
        let cells: Vec<String> = record
            .methods
            .iter()
            .map(|m| format!("{m} {:.1}%", 100.0 * record.reduction[m]))
            .collect();
        let lambda2 = record.connectivity.iter().sum::<f64>() / record.connectivity.len() as f64;
        println!("N_max = {value:>2}: mean lambda2 {lambda2:.3}, {}", cells.join(", "));
    }
    let dir = std::env::temp_dir().join("lapdiff_sweep");
    write_sweep(&dir, "n_max", &values, &runs, true)?;
    println!("results under {}", dir.display());
    Ok(())
}
