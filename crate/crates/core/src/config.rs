//! Scenario files and command-line overrides.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::simulator::{Method, ScenarioConfig, SourceKind};
use crate::{Error, Result};

pub const SEED_ENV: &str = "LAPDIFF_SEED";

/// Parse a TOML scenario. Relative trace paths resolve against `base_dir`.
pub fn parse_config(text: &str, base_dir: Option<&Path>) -> Result<ScenarioConfig> {
    let mut cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if let (Some(dir), Some(trace)) = (base_dir, cfg.trajectory.trace.as_mut()) {
        if trace.is_relative() {
            *trace = dir.join(&*trace);
        }
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path.parent())
        .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.to_string().trim_start_matches("configuration error: "))))
}

pub fn to_toml(cfg: &ScenarioConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| Error::Config(e.to_string()))
}

/// Comma-separated method names, e.g. `cll,gllme`.
pub fn parse_algorithms(list: &str) -> Result<Vec<Method>> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub algorithms: Option<Vec<Method>>,
}

/// Layer the environment seed and then explicit flags over a file config.
pub fn apply_overrides(mut cfg: ScenarioConfig, env_seed: Option<&str>, flags: &Overrides) -> Result<ScenarioConfig> {
    if let Some(raw) = env_seed {
        cfg.seed = raw
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV} must be an unsigned integer, got `{raw}`")))?;
    }
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    if let Some(algorithms) = &flags.algorithms {
        cfg.algorithms = algorithms.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// SHA-256 of the canonical JSON form of the configuration.
pub fn config_hash(cfg: &ScenarioConfig) -> String {
    let mut canonical = cfg.clone();
    if canonical.trajectory.source == SourceKind::Kinematic {
        canonical.trajectory.trace = None;
    }
    let json = serde_json::to_vec(&canonical).expect("configuration serializes to JSON");
    hex::encode(Sha256::digest(&json))
}
