//! Compare GPS and coherent initialization while tracking a moving fleet.

use lapdiff::{run_scenario, InitMode, InitPolicy, Method, ScenarioConfig};

fn main() -> lapdiff::Result<()> {
    let base = ScenarioConfig {
        horizon: 200,
        iterations: 20,
        algorithms: vec![Method::Gllms, Method::Gllme],
        ..Default::default()
    };
    for mode in [InitMode::Gps, InitMode::Coherent] {
        let record = run_scenario(&ScenarioConfig {
            init: InitPolicy {
                mode,
                ..Default::default()
            },
            ..base.clone()
        })?;
        for m in &record.methods {
            println!(
                "{mode:?} init, {m}: reduction {:.1}% with K = {}",
                100.0 * record.reduction[m],
                base.iterations
            );
        }
    }
    Ok(())
}
