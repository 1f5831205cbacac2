//! Localization under stale neighbor exchanges.

use lapdiff::{run_scenario, DelayPolicy, Method, ScenarioConfig};

fn main() -> lapdiff::Result<()> {
    let base = ScenarioConfig {
        horizon: 200,
        algorithms: vec![Method::Cll, Method::Gllms, Method::Gllme],
        ..Default::default()
    };
    let policies = [
        ("no delay", DelayPolicy::none()),
        ("random tau in 1..4", DelayPolicy::random_set(vec![1, 2, 3, 4])),
        ("tau = 4 from 80% of neighbors", DelayPolicy::fixed_fraction(4, 0.8)),
        ("tau = 4 from all neighbors", DelayPolicy::fixed_fraction(4, 1.0)),
    ];
    for (label, delay) in policies {
        let record = run_scenario(&ScenarioConfig { delay, ..base.clone() })?;
        let cells: Vec<String> = record
            .methods
            .iter()
            .map(|m| format!("{m} {:.1}%", 100.0 * record.reduction[m]))
            .collect();
        println!("{label:<30} {}", cells.join("  "));
    }
    Ok(())
}
