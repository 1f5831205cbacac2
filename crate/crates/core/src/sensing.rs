//! GPS, range and azimuth measurement models and differential coordinates.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::graph::VanetGraph;
use crate::rng::{self, Domain};
use crate::{Error, Point, Result};

/// How range noise is drawn on a link seen from both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkNoise {
    /// One draw per undirected link; the reverse reading is its mirror image.
    #[default]
    Shared,
    /// Each direction is measured independently.
    PerDirection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub sigma_d: f64,
    /// Azimuth noise, configured in degrees.
    pub sigma_az_deg: f64,
    pub link: LinkNoise,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            sigma_x: 3.0,
            sigma_y: 2.5,
            sigma_d: 1.0,
            sigma_az_deg: 4.0,
            link: LinkNoise::Shared,
        }
    }
}

impl NoiseConfig {
    pub fn noiseless() -> Self {
        Self {
            sigma_x: 0.0,
            sigma_y: 0.0,
            sigma_d: 0.0,
            sigma_az_deg: 0.0,
            link: LinkNoise::Shared,
        }
    }

    pub fn sigma_az(&self) -> f64 {
        self.sigma_az_deg.to_radians()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_x", self.sigma_x),
            ("sigma_y", self.sigma_y),
            ("sigma_d", self.sigma_d),
            ("sigma_az_deg", self.sigma_az_deg),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("noise.{name} must be a finite value >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeMeasurement {
    pub from: usize,
    pub to: usize,
    pub distance: f64,
    pub azimuth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    /// Noisy absolute positions, one per vehicle.
    pub gps: Vec<Point>,
    /// One reading per directed neighbor relation, sorted by `(from, to)`.
    pub ranges: Vec<RangeMeasurement>,
}

impl MeasurementSet {
    /// GPS anchors as an N×2 matrix.
    pub fn gps_matrix(&self) -> DMatrix<f64> {
        points_to_matrix(&self.gps)
    }

    pub fn from_vehicle(&self, i: usize) -> &[RangeMeasurement] {
        let start = self.ranges.partition_point(|m| m.from < i);
        let end = self.ranges.partition_point(|m| m.from <= i);
        &self.ranges[start..end]
    }
}

pub fn points_to_matrix(points: &[Point]) -> DMatrix<f64> {
    DMatrix::from_fn(points.len(), 2, |i, c| points[i][c])
}

/// Distance and azimuth from `p_i` to `p_l`, with the azimuth measured from
/// the +y axis toward +x so that Δx = d·sin(az) and Δy = d·cos(az).
pub fn true_range(p_i: &Point, p_l: &Point) -> Result<(f64, f64)> {
    let d = p_l - p_i;
    let distance = d.norm();
    if distance == 0.0 {
        return Err(Error::InvalidInput(format!(
            "coincident points at ({}, {}) have no azimuth",
            p_i.x, p_i.y
        )));
    }
    Ok((distance, d.x.atan2(d.y)))
}

fn wrap_angle(a: f64) -> f64 {
    let w = (a + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
    if w == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        w
    }
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn noisy_range(
    positions: &[Point],
    i: usize,
    l: usize,
    noise: &NoiseConfig,
    seed: u64,
    step: u64,
) -> (f64, f64) {
    let (d, az) = true_range(&positions[i], &positions[l]).unwrap_or((0.0, 0.0));
    let key = [step, i as u64, l as u64];
    let nd = noise.sigma_d * normal(&mut rng::stream(seed, Domain::Range, key));
    let naz = noise.sigma_az() * normal(&mut rng::stream(seed, Domain::Azimuth, key));
    ((d + nd).max(0.0), wrap_angle(az + naz))
}

/// Draw GPS and range readings for time step `step`.
///
/// Draws are keyed by `(seed, step, vehicle, peer)`, so the set is identical
/// regardless of evaluation order.
pub fn sample_measurements(
    positions: &[Point],
    graph: &VanetGraph,
    noise: &NoiseConfig,
    seed: u64,
    step: u64,
) -> Result<MeasurementSet> {
    if positions.len() != graph.len() {
        return Err(Error::InvalidInput(format!(
            "{} positions for a graph of {} vehicles",
            positions.len(),
            graph.len()
        )));
    }
    let gps = positions
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = rng::stream(seed, Domain::Gps, [step, i as u64, 0]);
            let nx = noise.sigma_x * normal(&mut rng);
            let ny = noise.sigma_y * normal(&mut rng);
            Point::new(p.x + nx, p.y + ny)
        })
        .collect();
    let mut ranges = Vec::with_capacity(2 * graph.edge_count());
    for i in 0..graph.len() {
        for &l in graph.neighbors(i) {
            let (distance, azimuth) = match noise.link {
                LinkNoise::PerDirection => noisy_range(positions, i, l, noise, seed, step),
                LinkNoise::Shared if i < l => noisy_range(positions, i, l, noise, seed, step),
                LinkNoise::Shared => {
                    let (d, az) = noisy_range(positions, l, i, noise, seed, step);
                    (d, wrap_angle(az + std::f64::consts::PI))
                }
            };
            ranges.push(RangeMeasurement {
                from: i,
                to: l,
                distance,
                azimuth,
            });
        }
    }
    Ok(MeasurementSet { gps, ranges })
}

/// Per-vehicle differential coordinates δ_i.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferentialCoords {
    pub delta_x: DVector<f64>,
    pub delta_y: DVector<f64>,
    /// False for isolated vehicles, whose δ is zero.
    pub valid: Vec<bool>,
}

impl DifferentialCoords {
    pub fn len(&self) -> usize {
        self.valid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valid.is_empty()
    }

    /// D·δ as an N×2 matrix: the right-hand side satisfying L·x = D·δ.
    pub fn scaled(&self, graph: &VanetGraph) -> DMatrix<f64> {
        DMatrix::from_fn(self.len(), 2, |i, c| {
            let delta = if c == 0 { self.delta_x[i] } else { self.delta_y[i] };
            graph.degree(i) as f64 * delta
        })
    }
}

/// δ_i = (1/d_i) Σ_l (−z̃_d·sin z̃_az, −z̃_d·cos z̃_az) over the neighbors of i.
pub fn differential_coords(ms: &MeasurementSet, graph: &VanetGraph) -> Result<DifferentialCoords> {
    let n = graph.len();
    if ms.gps.len() != n {
        return Err(Error::InvalidInput(format!(
            "measurement set covers {} vehicles, graph has {n}",
            ms.gps.len()
        )));
    }
    let mut delta_x = DVector::zeros(n);
    let mut delta_y = DVector::zeros(n);
    let mut valid = vec![false; n];
    for i in 0..n {
        let readings = ms.from_vehicle(i);
        if readings.is_empty() {
            continue;
        }
        if let Some(bad) = readings.iter().find(|m| !graph.has_edge(i, m.to)) {
            return Err(Error::InvalidInput(format!(
                "measurement {} -> {} is not a graph edge",
                bad.from, bad.to
            )));
        }
        let count = readings.len() as f64;
        delta_x[i] = readings.iter().map(|m| -m.distance * m.azimuth.sin()).sum::<f64>() / count;
        delta_y[i] = readings.iter().map(|m| -m.distance * m.azimuth.cos()).sum::<f64>() / count;
        valid[i] = true;
    }
    Ok(DifferentialCoords {
        delta_x,
        delta_y,
        valid,
    })
}
