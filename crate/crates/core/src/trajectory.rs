//! Ground-truth trajectories: bicycle-model fleets and recorded traces.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::output::fmt_f64;
use crate::rng::{self, Domain};
use crate::{Error, Point, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicState {
    pub x: f64,
    pub y: f64,
    /// Heading, radians from +x.
    pub theta: f64,
    /// Linear velocity, m/s.
    pub speed: f64,
    /// Angular velocity, rad/s.
    pub yaw_rate: f64,
}

impl KinematicState {
    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

const STRAIGHT_LINE_YAW_RATE: f64 = 1e-6;

/// Advance one step of the bicycle kinematic model with constant controls.
pub fn bicycle_step(state: &KinematicState, dt: f64) -> KinematicState {
    let KinematicState {
        x,
        y,
        theta,
        speed: s,
        yaw_rate: w,
    } = *state;
    let (x, y) = if w.abs() < STRAIGHT_LINE_YAW_RATE {
        (x + s * dt * theta.cos(), y + s * dt * theta.sin())
    } else {
        let r = s / w;
        (
            x - r * theta.sin() + r * (theta + w * dt).sin(),
            y + r * theta.cos() - r * (theta + w * dt).cos(),
        )
    };
    KinematicState {
        x,
        y,
        theta: theta + w * dt,
        ..*state
    }
}

/// Ground-truth positions sampled on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySet {
    pub dt: f64,
    /// External vehicle ids, one per column.
    pub ids: Vec<u64>,
    /// `positions[t][i]` is vehicle `i` at step `t`.
    pub positions: Vec<Vec<Point>>,
}

impl TrajectorySet {
    pub fn horizon(&self) -> usize {
        self.positions.len()
    }

    pub fn vehicle_count(&self) -> usize {
        self.ids.len()
    }

    pub fn at(&self, t: usize) -> &[Point] {
        &self.positions[t]
    }

    /// Write as `t,vehicle_id,x,y` rows ordered by time then vehicle.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "vehicle_id", "x", "y"])?;
        for (t, row) in self.positions.iter().enumerate() {
            let time = fmt_f64(t as f64 * self.dt);
            for (id, p) in self.ids.iter().zip(row) {
                w.write_record([time.as_str(), &id.to_string(), &fmt_f64(p.x), &fmt_f64(p.y)])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlPolicy {
    /// Vehicles track slots of a two-lane platoon whose reference path
    /// follows randomly resampled controls.
    #[default]
    Formation,
    /// Each vehicle draws its own controls, resampled periodically.
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FleetConfig {
    pub policy: ControlPolicy,
    pub speed_range: [f64; 2],
    pub yaw_rate_range: [f64; 2],
    pub resample_every: usize,
    pub lanes: usize,
    pub lane_width: f64,
    /// Bumper-to-bumper spacing within a lane, meters.
    pub gap_range: [f64; 2],
    /// Side of the square the platoon center starts in.
    pub origin_extent: f64,
    /// Longitudinal and lateral amplitude of slot wander, meters.
    pub wander: [f64; 2],
    /// Fraction of the remaining wander offset closed per step.
    pub wander_rate: f64,
}

impl Default for FleetConfig {
    fn default() -> Self {
        Self {
            policy: ControlPolicy::Formation,
            speed_range: [5.0, 12.0],
            yaw_rate_range: [-0.2, 0.2],
            resample_every: 50,
            lanes: 2,
            lane_width: 3.5,
            gap_range: [6.0, 12.0],
            origin_extent: 200.0,
            wander: [3.0, 0.9],
            wander_rate: 0.05,
        }
    }
}

impl FleetConfig {
    pub fn validate(&self) -> Result<()> {
        let range_ok = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
        if !range_ok(self.speed_range) || self.speed_range[0] < 0.0 {
            return Err(Error::Config("fleet.speed_range must be an ordered pair of speeds >= 0".into()));
        }
        if !range_ok(self.yaw_rate_range) {
            return Err(Error::Config("fleet.yaw_rate_range must be an ordered pair".into()));
        }
        if !range_ok(self.gap_range) || self.gap_range[0] < 0.0 {
            return Err(Error::Config("fleet.gap_range must be an ordered pair of gaps >= 0".into()));
        }
        if self.resample_every == 0 || self.lanes == 0 {
            return Err(Error::Config("fleet.resample_every and fleet.lanes must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.wander_rate) {
            return Err(Error::Config("fleet.wander_rate must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

fn uniform(rng: &mut impl Rng, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.random_range(range[0]..range[1])
    }
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

/// Controls that carry a bicycle from `state` onto `target` in one step:
/// the chord of an arc leaves at heading θ + ω·dt/2.
fn controls_toward(state: &KinematicState, target: Point, dt: f64) -> (f64, f64) {
    let delta = target - state.position();
    let chord = delta.norm();
    if chord == 0.0 {
        return (0.0, 0.0);
    }
    let turn = wrap(delta.y.atan2(delta.x) - state.theta);
    let yaw_rate = 2.0 * turn / dt;
    let half = yaw_rate * dt / 2.0;
    let speed = if half.abs() < 1e-9 {
        chord / dt
    } else {
        chord * yaw_rate / (2.0 * half.sin())
    };
    (speed, yaw_rate)
}

struct Reference {
    x: f64,
    y: f64,
    theta: f64,
}

/// Simulate `n` vehicles for `horizon` steps of `dt` seconds.
pub fn generate_fleet(n: usize, horizon: usize, dt: f64, cfg: &FleetConfig, seed: u64) -> Result<TrajectorySet> {
    if n == 0 || horizon == 0 {
        return Err(Error::Config("fleet needs at least one vehicle and one step".into()));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    cfg.validate()?;

    let mut layout_rng = rng::stream(seed, Domain::Fleet, [0, 0, 0]);
    let mut lane_fill = vec![0.0; cfg.lanes];
    let mut slots: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let lane = i % cfg.lanes;
            lane_fill[lane] += uniform(&mut layout_rng, cfg.gap_range);
            [-lane_fill[lane], -(lane as f64) * cfg.lane_width]
        })
        .collect();
    let centroid = slots.iter().fold([0.0, 0.0], |acc, s| [acc[0] + s[0], acc[1] + s[1]]);
    for s in &mut slots {
        s[0] -= centroid[0] / n as f64;
        s[1] -= centroid[1] / n as f64;
    }
    let mut reference = Reference {
        x: uniform(&mut layout_rng, [0.0, cfg.origin_extent]),
        y: uniform(&mut layout_rng, [0.0, cfg.origin_extent]),
        theta: uniform(&mut layout_rng, [-PI, PI]),
    };

    let slot_position = |r: &Reference, slot: [f64; 2], wander: [f64; 2]| {
        let (lon, lat) = (slot[0] + wander[0], slot[1] + wander[1]);
        let (s, c) = r.theta.sin_cos();
        Point::new(r.x + c * lon - s * lat, r.y + s * lon + c * lat)
    };

    let mut wander = vec![[0.0; 2]; n];
    let mut states: Vec<KinematicState> = slots
        .iter()
        .map(|&slot| {
            let p = slot_position(&reference, slot, [0.0; 2]);
            KinematicState {
                x: p.x,
                y: p.y,
                theta: reference.theta,
                speed: 0.0,
                yaw_rate: 0.0,
            }
        })
        .collect();

    let mut positions = Vec::with_capacity(horizon);
    let (mut ref_speed, mut ref_yaw, mut wander_target) = (0.0, 0.0, vec![[0.0; 2]; n]);
    for t in 0..horizon {
        positions.push(states.iter().map(KinematicState::position).collect());
        if t + 1 == horizon {
            break;
        }
        if t % cfg.resample_every == 0 {
            let epoch = (t / cfg.resample_every) as u64;
            let mut rng = rng::stream(seed, Domain::Fleet, [1, epoch, 0]);
            ref_speed = uniform(&mut rng, cfg.speed_range);
            ref_yaw = uniform(&mut rng, cfg.yaw_rate_range);
            for (i, (target, state)) in wander_target.iter_mut().zip(&mut states).enumerate() {
                let mut rng = rng::stream(seed, Domain::Fleet, [2, epoch, i as u64]);
                *target = [
                    uniform(&mut rng, [-cfg.wander[0], cfg.wander[0]]),
                    uniform(&mut rng, [-cfg.wander[1], cfg.wander[1]]),
                ];
                if cfg.policy == ControlPolicy::Independent {
                    state.speed = uniform(&mut rng, cfg.speed_range);
                    state.yaw_rate = uniform(&mut rng, cfg.yaw_rate_range);
                }
            }
        }
        match cfg.policy {
            ControlPolicy::Independent => {
                for state in &mut states {
                    *state = bicycle_step(state, dt);
                }
            }
            ControlPolicy::Formation => {
                reference = {
                    let next = bicycle_step(
                        &KinematicState {
                            x: reference.x,
                            y: reference.y,
                            theta: reference.theta,
                            speed: ref_speed,
                            yaw_rate: ref_yaw,
                        },
                        dt,
                    );
                    Reference {
                        x: next.x,
                        y: next.y,
                        theta: next.theta,
                    }
                };
                for i in 0..n {
                    for axis in 0..2 {
                        wander[i][axis] += (wander_target[i][axis] - wander[i][axis]) * cfg.wander_rate;
                    }
                    let target = slot_position(&reference, slots[i], wander[i]);
                    let (speed, yaw_rate) = controls_toward(&states[i], target, dt);
                    states[i].speed = speed;
                    states[i].yaw_rate = yaw_rate;
                    states[i] = bicycle_step(&states[i], dt);
                }
            }
        }
    }
    Ok(TrajectorySet {
        dt,
        ids: (0..n as u64).collect(),
        positions,
    })
}

const TRACE_COLUMNS: [&str; 4] = ["t", "vehicle_id", "x", "y"];

/// Load a `t,vehicle_id,x,y` trace from disk.
pub fn ingest_traces(path: &Path) -> Result<TrajectorySet> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_traces(file, path)
}

/// Parse a trace; `origin` only labels error messages.
pub fn read_traces<R: Read>(reader: R, origin: &Path) -> Result<TrajectorySet> {
    let parse_err = |line: u64, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let mut col = [0usize; 4];
    for (slot, name) in col.iter_mut().zip(TRACE_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(1, format!("missing column `{name}`")))?;
    }

    let mut rows: BTreeMap<u64, Vec<(f64, Point)>> = BTreeMap::new();
    let mut times: BTreeMap<u64, u64> = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |k: usize| {
            record
                .get(col[k])
                .ok_or_else(|| parse_err(line, format!("missing value for `{}`", TRACE_COLUMNS[k])))
        };
        let number = |k: usize| -> Result<f64> {
            let raw = field(k)?;
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("`{}` is not a finite number: {raw:?}", TRACE_COLUMNS[k])))
        };
        let t = number(0)?;
        let raw_id = field(1)?;
        let id = raw_id
            .parse::<u64>()
            .map_err(|_| parse_err(line, format!("`vehicle_id` is not an unsigned integer: {raw_id:?}")))?;
        let p = Point::new(number(2)?, number(3)?);
        let track = rows.entry(id).or_default();
        if let Some(&(last, _)) = track.last() {
            if t == last {
                return Err(parse_err(line, format!("duplicate row for vehicle {id} at t={t}")));
            }
            if t < last {
                return Err(parse_err(line, format!("time goes backwards for vehicle {id} ({t} after {last})")));
            }
        }
        track.push((t, p));
        times.entry(t.to_bits()).or_insert(line);
    }
    if rows.is_empty() {
        return Err(parse_err(2, "trace has no data rows".into()));
    }

    let mut grid: Vec<f64> = times.keys().map(|&b| f64::from_bits(b)).collect();
    grid.sort_by(f64::total_cmp);
    for (id, track) in &rows {
        if track.len() != grid.len() {
            let missing = grid
                .iter()
                .find(|t| !track.iter().any(|(tt, _)| tt == *t))
                .copied()
                .unwrap_or(grid[0]);
            let line = times[&missing.to_bits()];
            return Err(parse_err(
                line,
                format!(
                    "inconsistent vehicle count: vehicle {id} has {} of {} timestamps (missing t={missing})",
                    track.len(),
                    grid.len()
                ),
            ));
        }
    }
    let dt = if grid.len() > 1 {
        (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64
    } else {
        0.1
    };
    let ids: Vec<u64> = rows.keys().copied().collect();
    let positions = (0..grid.len())
        .map(|t| rows.values().map(|track| track[t].1).collect())
        .collect();
    Ok(TrajectorySet { dt, ids, positions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphConfig, VanetGraph};
    use approx::assert_abs_diff_eq;

    fn state(theta: f64, speed: f64, yaw_rate: f64) -> KinematicState {
        KinematicState {
            x: 0.0,
            y: 0.0,
            theta,
            speed,
            yaw_rate,
        }
    }

    #[test]
    fn straight_line_step() {
        let next = bicycle_step(&state(0.0, 1.0, 0.0), 0.1);
        assert_abs_diff_eq!(next.x, 0.1, epsilon = 1e-15);
        assert_eq!(next.y, 0.0);
    }

    #[test]
    fn half_circle() {
        let next = bicycle_step(&state(0.0, PI, PI), 1.0);
        assert_abs_diff_eq!(next.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(next.y, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(next.theta, PI, epsilon = 1e-15);
    }

    #[test]
    fn small_yaw_rate_matches_straight_limit() {
        let s = state(0.7, 9.0, 0.0);
        let arc = bicycle_step(&KinematicState { yaw_rate: 1e-7, ..s }, 0.1);
        let line = bicycle_step(&s, 0.1);
        assert_abs_diff_eq!(arc.x, line.x, epsilon = 1e-8);
        assert_abs_diff_eq!(arc.y, line.y, epsilon = 1e-8);
    }

    #[test]
    fn controls_reach_target() {
        let s = state(0.3, 0.0, 0.0);
        for target in [Point::new(1.0, 0.5), Point::new(0.2, -0.4), Point::new(-0.1, 0.8)] {
            let (speed, yaw_rate) = controls_toward(&s, target, 0.1);
            assert!(speed >= 0.0);
            let next = bicycle_step(&KinematicState { speed, yaw_rate, ..s }, 0.1);
            assert_abs_diff_eq!(next.x, target.x, epsilon = 1e-12);
            assert_abs_diff_eq!(next.y, target.y, epsilon = 1e-12);
        }
    }

    #[test]
    fn stationary_single_vehicle() {
        let cfg = FleetConfig {
            policy: ControlPolicy::Independent,
            speed_range: [0.0, 0.0],
            ..Default::default()
        };
        let fleet = generate_fleet(1, 20, 0.1, &cfg, 3).unwrap();
        assert!(fleet.positions.iter().all(|row| row[0] == fleet.positions[0][0]));
    }

    #[test]
    fn fleet_is_deterministic() {
        let a = generate_fleet(8, 120, 0.1, &FleetConfig::default(), 42).unwrap();
        let b = generate_fleet(8, 120, 0.1, &FleetConfig::default(), 42).unwrap();
        let c = generate_fleet(8, 120, 0.1, &FleetConfig::default(), 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn formation_stays_connected_enough() {
        let fleet = generate_fleet(10, 500, 0.1, &FleetConfig::default(), 1).unwrap();
        let cfg = GraphConfig::default();
        let mean: f64 = fleet
            .positions
            .iter()
            .map(|p| VanetGraph::build(p, &cfg).unwrap().mean_degree())
            .sum::<f64>()
            / 500.0;
        assert!(mean >= 2.0, "mean degree {mean}");
    }

    #[test]
    fn formation_speeds_stay_plausible() {
        let fleet = generate_fleet(13, 500, 0.1, &FleetConfig::default(), 2).unwrap();
        for t in 1..fleet.horizon() {
            for i in 0..13 {
                let v = (fleet.at(t)[i] - fleet.at(t - 1)[i]).norm() / 0.1;
                assert!(v < 25.0, "vehicle {i} at {v} m/s, step {t}");
            }
        }
    }

    #[test]
    fn trace_round_trip() {
        let fleet = generate_fleet(3, 5, 0.1, &FleetConfig::default(), 9).unwrap();
        let mut buf = Vec::new();
        fleet.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 16);
        let back = read_traces(buf.as_slice(), Path::new("mem")).unwrap();
        assert_eq!(back.positions, fleet.positions);
        assert_eq!(back.ids, fleet.ids);
        assert_abs_diff_eq!(back.dt, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn trace_identity_ingestion() {
        let text = "t,vehicle_id,x,y\n0,7,1,2\n0,9,3,4\n0.5,7,1.5,2\n0.5,9,3.5,4\n1,7,2,2\n1,9,4,4\n";
        let set = read_traces(text.as_bytes(), Path::new("mem")).unwrap();
        assert_eq!(set.horizon(), 3);
        assert_eq!(set.ids, vec![7, 9]);
        assert_eq!(set.at(2), &[Point::new(2.0, 2.0), Point::new(4.0, 4.0)]);
        assert_eq!(set.dt, 0.5);
    }

    fn parse_failure(text: &str) -> (u64, String) {
        match read_traces(text.as_bytes(), Path::new("mem")) {
            Err(Error::Parse { line, msg, .. }) => (line, msg),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn trace_errors() {
        let (line, msg) = parse_failure("t,vehicle_id,x\n0,1,2\n");
        assert_eq!(line, 1);
        assert!(msg.contains("`y`"), "{msg}");

        let (line, msg) = parse_failure("t,vehicle_id,x,y\n0,1,0,0\n0,1,1,1\n");
        assert_eq!(line, 3);
        assert!(msg.contains("duplicate"), "{msg}");

        let (line, msg) = parse_failure("t,vehicle_id,x,y\n0,1,0,0\n0,2,0,0\n1,1,1,1\n");
        assert_eq!(line, 4);
        assert!(msg.contains("inconsistent vehicle count"), "{msg}");

        let (line, msg) = parse_failure("t,vehicle_id,x,y\n0,1,0,0\n1,1,abc,0\n");
        assert_eq!(line, 3);
        assert!(msg.contains("`x`"), "{msg}");
    }
}
