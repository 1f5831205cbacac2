//! The experiment loop: trajectories in, localization metrics out.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centralized::cll_solve;
use crate::diffusion::{
    coherent_init, reset_on_membership_change, Algorithm, DelayMode, DelayPolicy, DelaySchedule, Diffusion,
    DiffusionConfig, InitMode, InitPolicy, Network,
};
use crate::graph::{GraphConfig, VanetGraph};
use crate::metrics::{self, empirical_cdf};
use crate::sensing::{differential_coords, points_to_matrix, sample_measurements, NoiseConfig};
use crate::trajectory::{generate_fleet, ingest_traces, FleetConfig, TrajectorySet};
use crate::{Error, Point, Result};

/// A localization method: the centralized baseline or a diffusion scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Cll,
    Gllms,
    Gllme,
    Glcg,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Cll, Method::Gllms, Method::Gllme, Method::Glcg];

    pub fn name(self) -> &'static str {
        match self {
            Method::Cll => "cll",
            Method::Gllms => "gllms",
            Method::Gllme => "gllme",
            Method::Glcg => "glcg",
        }
    }

    pub fn diffusion(self) -> Option<Algorithm> {
        match self {
            Method::Cll => None,
            Method::Gllms => Some(Algorithm::Gllms),
            Method::Gllme => Some(Algorithm::Gllme),
            Method::Glcg => Some(Algorithm::Glcg),
        }
    }
}

impl From<Algorithm> for Method {
    fn from(a: Algorithm) -> Self {
        match a {
            Algorithm::Gllms => Method::Gllms,
            Algorithm::Gllme => Method::Gllme,
            Algorithm::Glcg => Method::Glcg,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}` (expected cll, gllms, gllme or glcg)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    #[default]
    Kinematic,
    Trace,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectorySource {
    pub source: SourceKind,
    /// Trace CSV, required for `source = "trace"`.
    pub trace: Option<PathBuf>,
    /// Localize only this vehicle's connected component each step.
    pub objective: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub vehicles: usize,
    pub horizon: usize,
    pub iterations: usize,
    pub dt: f64,
    pub algorithms: Vec<Method>,
    /// Agent whose estimate is scored for LMSE.
    pub reporting_agent: usize,
    pub trajectory: TrajectorySource,
    pub graph: GraphConfig,
    pub noise: NoiseConfig,
    pub delay: DelayPolicy,
    pub init: InitPolicy,
    pub diffusion: DiffusionConfig,
    pub fleet: FleetConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            vehicles: 13,
            horizon: 500,
            iterations: 70,
            dt: 0.1,
            algorithms: Method::ALL.to_vec(),
            reporting_agent: 0,
            trajectory: TrajectorySource::default(),
            graph: GraphConfig::default(),
            noise: NoiseConfig::default(),
            delay: DelayPolicy::default(),
            init: InitPolicy::default(),
            diffusion: DiffusionConfig::default(),
            fleet: FleetConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vehicles == 0 || self.horizon == 0 || self.iterations == 0 {
            return Err(Error::Config("vehicles, horizon and iterations must all be at least 1".into()));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("at least one algorithm must be selected".into()));
        }
        let mut seen = self.algorithms.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.algorithms.len() {
            return Err(Error::Config("algorithms must not repeat".into()));
        }
        match self.trajectory.source {
            SourceKind::Kinematic if self.reporting_agent >= self.vehicles => {
                return Err(Error::Config(format!(
                    "reporting_agent {} is out of range for {} vehicles",
                    self.reporting_agent, self.vehicles
                )))
            }
            SourceKind::Trace if self.trajectory.trace.is_none() => {
                return Err(Error::Config("trajectory.trace is required when source = \"trace\"".into()))
            }
            _ => {}
        }
        self.graph.validate()?;
        self.noise.validate()?;
        self.delay.validate()?;
        self.init.validate()?;
        self.diffusion.validate()?;
        self.fleet.validate()
    }

    /// Diffusion schemes that actually run, after delay exclusions.
    pub fn active_algorithms(&self) -> Vec<Method> {
        self.algorithms
            .iter()
            .copied()
            .filter(|m| !(*m == Method::Glcg && self.delay.is_active() && !self.delay.include_glcg))
            .collect()
    }

    pub fn load_trajectories(&self) -> Result<TrajectorySet> {
        match self.trajectory.source {
            SourceKind::Kinematic => generate_fleet(self.vehicles, self.horizon, self.dt, &self.fleet, self.seed),
            SourceKind::Trace => {
                let path = self
                    .trajectory
                    .trace
                    .as_ref()
                    .ok_or_else(|| Error::Config("trajectory.trace is required".into()))?;
                let mut set = ingest_traces(path)?;
                set.positions.truncate(self.horizon);
                Ok(set)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_ms: f64,
    pub mean_step_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    /// Methods that ran, in configuration order.
    pub methods: Vec<Method>,
    /// Selected methods left out of the run.
    pub skipped: Vec<Method>,
    /// AMSD per iteration 1..=K; constant for the centralized baseline.
    pub amsd: BTreeMap<Method, Vec<f64>>,
    /// Reporting agent's LMSE per step.
    pub lmse: BTreeMap<Method, Vec<f64>>,
    pub gps_lmse: Vec<f64>,
    pub reduction: BTreeMap<Method, f64>,
    /// λ₂ of each step's graph (0 for a single vehicle).
    pub connectivity: Vec<f64>,
    pub vehicle_counts: Vec<usize>,
    pub timings: BTreeMap<Method, Timing>,
}

impl MetricsRecord {
    pub fn mean_lmse(&self, method: Method) -> Option<f64> {
        self.lmse.get(&method).map(|v| mean(v))
    }

    pub fn mean_gps_lmse(&self) -> f64 {
        mean(&self.gps_lmse)
    }

    pub fn cdf(&self, method: Method) -> Option<Vec<(f64, f64)>> {
        self.lmse.get(&method).and_then(|v| empirical_cdf(v).ok())
    }

    pub fn gps_cdf(&self) -> Vec<(f64, f64)> {
        empirical_cdf(&self.gps_lmse).unwrap_or_default()
    }

    /// The record with wall-clock data removed, for reproducibility checks.
    pub fn without_timings(&self) -> Self {
        Self {
            timings: BTreeMap::new(),
            ..self.clone()
        }
    }
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

/// Final estimates of one method at one time step, passed to observers.
#[derive(Debug)]
pub struct StepOutcome<'a> {
    pub t: usize,
    pub ids: &'a [u64],
    pub truth: &'a DMatrix<f64>,
    pub method: Method,
    /// One matrix per agent (a single matrix for the centralized baseline).
    pub estimates: &'a [DMatrix<f64>],
}

/// Per-step wall-clock table.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub rows: Vec<(Method, Timing)>,
}

impl fmt::Display for TimingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<8} {:>14} {:>14}", "method", "total [ms]", "per step [ms]")?;
        for (m, t) in &self.rows {
            writeln!(f, "{:<8} {:>14.3} {:>14.4}", m.name(), t.total_ms, t.mean_step_ms)?;
        }
        Ok(())
    }
}

pub fn timing_report(record: &MetricsRecord) -> TimingReport {
    TimingReport {
        rows: record
            .methods
            .iter()
            .filter_map(|m| record.timings.get(m).map(|t| (*m, *t)))
            .collect(),
    }
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<MetricsRecord> {
    run_scenario_observed(cfg, |_| {})
}

struct Tracker {
    method: Method,
    amsd: Vec<f64>,
    lmse: Vec<f64>,
    elapsed: Duration,
    previous: Option<Vec<DMatrix<f64>>>,
}

/// [`run_scenario`] with a callback receiving every method's final
/// estimates at every step.
pub fn run_scenario_observed(
    cfg: &ScenarioConfig,
    mut on_step: impl FnMut(&StepOutcome<'_>),
) -> Result<MetricsRecord> {
    cfg.validate()?;
    let trajectories = cfg.load_trajectories()?;
    let horizon = trajectories.horizon();
    if horizon == 0 {
        return Err(Error::InvalidInput("trajectory set is empty".into()));
    }
    let objective = match cfg.trajectory.objective {
        Some(id) => Some(
            trajectories
                .ids
                .iter()
                .position(|&v| v == id)
                .ok_or_else(|| Error::Config(format!("objective vehicle {id} does not appear in the trace")))?,
        ),
        None => None,
    };
    if objective.is_none() && cfg.reporting_agent >= trajectories.vehicle_count() {
        return Err(Error::Config(format!(
            "reporting_agent {} is out of range for {} vehicles",
            cfg.reporting_agent,
            trajectories.vehicle_count()
        )));
    }

    let methods = cfg.active_algorithms();
    let skipped: Vec<Method> = cfg.algorithms.iter().copied().filter(|m| !methods.contains(m)).collect();
    let k_max = cfg.iterations;
    let mut trackers: Vec<Tracker> = methods
        .iter()
        .map(|&method| Tracker {
            method,
            amsd: vec![0.0; k_max],
            lmse: Vec::with_capacity(horizon),
            elapsed: Duration::ZERO,
            previous: None,
        })
        .collect();
    let mut gps_lmse = Vec::with_capacity(horizon);
    let mut connectivity = Vec::with_capacity(horizon);
    let mut vehicle_counts = Vec::with_capacity(horizon);
    let mut previous_ids: Option<Vec<u64>> = None;

    for t in 0..horizon {
        let all = trajectories.at(t);
        let (members, reporter) = match objective {
            Some(obj) => {
                let full = VanetGraph::build(all, &cfg.graph)?;
                let members = full.component_of(obj);
                let reporter = members.binary_search(&obj).expect("objective belongs to its component");
                (members, reporter)
            }
            None => ((0..all.len()).collect::<Vec<_>>(), cfg.reporting_agent),
        };
        let positions: Vec<Point> = members.iter().map(|&i| all[i]).collect();
        let ids: Vec<u64> = members.iter().map(|&i| trajectories.ids[i]).collect();
        let n = positions.len();

        let graph = VanetGraph::build(&positions, &cfg.graph)?;
        let weights = graph.metropolis_weights();
        let ms = sample_measurements(&positions, &graph, &cfg.noise, cfg.seed, t as u64)?;
        let diffs = differential_coords(&ms, &graph)?;
        let s = diffs.scaled(&graph);
        let gps = ms.gps_matrix();
        let truth = points_to_matrix(&positions);
        let truth_row = Point::new(truth[(reporter, 0)], truth[(reporter, 1)]);

        let membership_changed = previous_ids.as_deref().is_none_or(|prev| reset_on_membership_change(prev, &ids));
        previous_ids = Some(ids.clone());
        connectivity.push(if n >= 2 { graph.algebraic_connectivity()? } else { 0.0 });
        vehicle_counts.push(n);
        gps_lmse.push(row_error(&gps, reporter, &truth_row));

        for tracker in &mut trackers {
            match tracker.method.diffusion() {
                None => {
                    let clock = Instant::now();
                    let sol = cll_solve(&graph, &diffs, &gps)?;
                    tracker.elapsed += clock.elapsed();
                    let dev = metrics::normalized_deviation(&sol.positions, &truth);
                    tracker.amsd.iter_mut().for_each(|a| *a += dev);
                    tracker.lmse.push(row_error(&sol.positions, reporter, &truth_row));
                    on_step(&StepOutcome {
                        t,
                        ids: &ids,
                        truth: &truth,
                        method: tracker.method,
                        estimates: std::slice::from_ref(&sol.positions),
                    });
                }
                Some(algorithm) => {
                    let clock = Instant::now();
                    let previous = if membership_changed { None } else { tracker.previous.as_ref() };
                    let initial: Vec<DMatrix<f64>> = (0..n)
                        .map(|i| coherent_init(i, &graph, &gps, previous.map(|p| &p[i]), &cfg.init))
                        .collect();
                    let delay = DelaySchedule::new(&cfg.delay, &graph, cfg.seed, t as u64);
                    let net = Network {
                        graph: &graph,
                        weights: &weights,
                        measurements: &s,
                    };
                    let mut run = Diffusion::new(algorithm, net, initial, &cfg.diffusion, delay)?;
                    tracker.elapsed += clock.elapsed();
                    for k in 0..k_max {
                        let clock = Instant::now();
                        run.step().map_err(|e| with_step(e, t))?;
                        tracker.elapsed += clock.elapsed();
                        tracker.amsd[k] += metrics::network_deviation(run.estimates(), &truth);
                    }
                    let finals: Vec<DMatrix<f64>> = run.into_agents().into_iter().map(|a| a.w).collect();
                    tracker.lmse.push(row_error(&finals[reporter], reporter, &truth_row));
                    on_step(&StepOutcome {
                        t,
                        ids: &ids,
                        truth: &truth,
                        method: tracker.method,
                        estimates: &finals,
                    });
                    tracker.previous = Some(finals);
                }
            }
        }
    }

    let gps_mean = mean(&gps_lmse);
    let mut record = MetricsRecord {
        methods: methods.clone(),
        skipped,
        amsd: BTreeMap::new(),
        lmse: BTreeMap::new(),
        gps_lmse,
        reduction: BTreeMap::new(),
        connectivity,
        vehicle_counts,
        timings: BTreeMap::new(),
    };
    for tracker in trackers {
        let amsd = tracker.amsd.iter().map(|a| a / horizon as f64).collect();
        let total_ms = tracker.elapsed.as_secs_f64() * 1e3;
        record.reduction.insert(tracker.method, 1.0 - mean(&tracker.lmse) / gps_mean);
        record.amsd.insert(tracker.method, amsd);
        record.lmse.insert(tracker.method, tracker.lmse);
        record.timings.insert(
            tracker.method,
            Timing {
                total_ms,
                mean_step_ms: total_ms / horizon as f64,
            },
        );
    }
    Ok(record)
}

fn row_error(estimate: &DMatrix<f64>, row: usize, truth: &Point) -> f64 {
    let dx = estimate[(row, 0)] - truth.x;
    let dy = estimate[(row, 1)] - truth.y;
    dx * dx + dy * dy
}

fn with_step(e: Error, t: usize) -> Error {
    match e {
        Error::Divergence {
            algorithm,
            iteration,
            vehicle,
            ..
        } => Error::Divergence {
            algorithm,
            step: Some(t),
            iteration,
            vehicle,
        },
        other => other,
    }
}

/// Parameters a sweep can vary.
pub const SWEEP_AXES: [&str; 12] = [
    "n",
    "n_max",
    "comm_range",
    "sigma_d",
    "sigma_az",
    "range_noise",
    "delay_mode",
    "tau",
    "iterations",
    "init_mode",
    "threshold",
    "forgetting_factor",
];

fn parse_value<T: FromStr>(axis: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{value}` is not a valid value for sweep axis `{axis}`")))
}

/// Copy of `base` with one parameter replaced.
///
/// `range_noise` takes `sigma_d:sigma_az_deg` pairs such as `4:7`.
pub fn apply_axis(base: &ScenarioConfig, axis: &str, value: &str) -> Result<ScenarioConfig> {
    let mut cfg = base.clone();
    match axis {
        "n" => cfg.vehicles = parse_value(axis, value)?,
        "n_max" => cfg.graph.max_neighbors = parse_value(axis, value)?,
        "comm_range" => cfg.graph.comm_range = parse_value(axis, value)?,
        "sigma_d" => cfg.noise.sigma_d = parse_value(axis, value)?,
        "sigma_az" => cfg.noise.sigma_az_deg = parse_value(axis, value)?,
        "range_noise" => {
            let (d, az) = value
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("range_noise values look like `4:7`, got `{value}`")))?;
            cfg.noise.sigma_d = parse_value(axis, d)?;
            cfg.noise.sigma_az_deg = parse_value(axis, az)?;
        }
        "delay_mode" => {
            cfg.delay.mode = match value.trim() {
                "none" => DelayMode::None,
                "random_set" => DelayMode::RandomSet,
                "fixed_fraction" => DelayMode::FixedFraction,
                other => return Err(Error::Config(format!("unknown delay mode `{other}`"))),
            }
        }
        "tau" => cfg.delay.tau_values = vec![parse_value(axis, value)?],
        "iterations" => cfg.iterations = parse_value(axis, value)?,
        "init_mode" => {
            cfg.init.mode = match value.trim() {
                "gps" => InitMode::Gps,
                "coherent" => InitMode::Coherent,
                other => return Err(Error::Config(format!("unknown init mode `{other}`"))),
            }
        }
        "threshold" => cfg.init.threshold = parse_value(axis, value)?,
        "forgetting_factor" => cfg.diffusion.forgetting_factor = parse_value(axis, value)?,
        _ => {
            return Err(Error::Config(format!(
                "unknown sweep axis `{axis}` (expected one of {})",
                SWEEP_AXES.join(", ")
            )))
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// One record per value. Every run keeps the base seed, so runs differ
/// only in the swept parameter. Values run in parallel.
pub fn run_sweep(base: &ScenarioConfig, axis: &str, values: &[String]) -> Result<Vec<(ScenarioConfig, MetricsRecord)>> {
    let configs: Vec<ScenarioConfig> = values.iter().map(|v| apply_axis(base, axis, v)).collect::<Result<_>>()?;
    configs
        .into_par_iter()
        .map(|cfg| run_scenario(&cfg).map(|record| (cfg, record)))
        .collect()
}

/// Ground truth of a kinematic scenario at step `t`, for examples and checks.
pub fn positions_at(cfg: &ScenarioConfig, t: usize) -> Result<Vec<Point>> {
    let set = cfg.load_trajectories()?;
    set.positions
        .get(t)
        .cloned()
        .ok_or_else(|| Error::InvalidInput(format!("step {t} is beyond the horizon of {}", set.horizon())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            vehicles: 6,
            horizon: 20,
            iterations: 15,
            seed: 4,
            ..Default::default()
        }
    }

    #[test]
    fn zero_noise_is_exact() {
        let cfg = ScenarioConfig {
            noise: NoiseConfig::noiseless(),
            init: InitPolicy {
                mode: InitMode::Gps,
                ..Default::default()
            },
            ..small()
        };
        let record = run_scenario(&cfg).unwrap();
        for m in [Method::Cll, Method::Gllms, Method::Gllme, Method::Glcg] {
            assert!(record.lmse[&m].iter().all(|&e| e < 1e-12), "{m}: {:?}", record.lmse[&m]);
            assert!(record.amsd[&m][0] < 1e-20, "{m}");
        }
        assert!(record.gps_lmse.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn record_shapes() {
        let record = run_scenario(&small()).unwrap();
        assert_eq!(record.methods, Method::ALL.to_vec());
        for m in Method::ALL {
            assert_eq!(record.amsd[&m].len(), 15);
            assert_eq!(record.lmse[&m].len(), 20);
            let r = record.reduction[&m];
            assert_eq!(r, 1.0 - record.mean_lmse(m).unwrap() / record.mean_gps_lmse());
        }
        assert_eq!(record.connectivity.len(), 20);
        assert!(record.vehicle_counts.iter().all(|&n| n == 6));
        let cll = &record.amsd[&Method::Cll];
        assert!(cll.iter().all(|&a| a == cll[0]));
    }

    #[test]
    fn deterministic_apart_from_timings() {
        let a = run_scenario(&small()).unwrap();
        let b = run_scenario(&small()).unwrap();
        assert_eq!(a.without_timings(), b.without_timings());
    }

    #[test]
    fn final_amsd_matches_dumped_estimates() {
        let cfg = small();
        let mut offline: BTreeMap<Method, f64> = BTreeMap::new();
        let record = run_scenario_observed(&cfg, |o| {
            *offline.entry(o.method).or_default() += metrics::network_deviation(o.estimates, o.truth);
        })
        .unwrap();
        for (m, total) in offline {
            let recomputed = total / cfg.horizon as f64;
            let reported = *record.amsd[&m].last().unwrap();
            assert!((recomputed - reported).abs() <= 1e-10 * reported.max(1e-300), "{m}");
        }
    }

    #[test]
    fn delay_excludes_cg_by_default() {
        let cfg = ScenarioConfig {
            delay: DelayPolicy::random_set(vec![1, 2, 3, 4]),
            ..small()
        };
        let record = run_scenario(&cfg).unwrap();
        assert_eq!(record.skipped, vec![Method::Glcg]);
        assert!(!record.lmse.contains_key(&Method::Glcg));
    }

    #[test]
    fn sweep_axes() {
        let base = small();
        let cfg = apply_axis(&base, "range_noise", "4:7").unwrap();
        assert_eq!((cfg.noise.sigma_d, cfg.noise.sigma_az_deg), (4.0, 7.0));
        assert!(apply_axis(&base, "colour", "red").is_err());
        assert!(apply_axis(&base, "n", "zero").is_err());
        let runs = run_sweep(&base, "n", &["3".into(), "5".into()]).unwrap();
        assert_eq!(runs.len(), 2);
        assert_eq!(runs[1].1.vehicle_counts[0], 5);
    }

    #[test]
    fn timing_table_lists_methods() {
        let record = run_scenario(&small()).unwrap();
        let report = timing_report(&record);
        assert_eq!(report.rows.len(), 4);
        assert!(report.to_string().contains("gllme"));
    }

    #[test]
    fn invalid_configs() {
        for cfg in [
            ScenarioConfig { vehicles: 0, ..small() },
            ScenarioConfig { iterations: 0, ..small() },
            ScenarioConfig { algorithms: vec![], ..small() },
            ScenarioConfig { reporting_agent: 6, ..small() },
            ScenarioConfig {
                trajectory: TrajectorySource {
                    source: SourceKind::Trace,
                    ..Default::default()
                },
                ..small()
            },
        ] {
            assert!(matches!(run_scenario(&cfg), Err(Error::Config(_))));
        }
    }
}
