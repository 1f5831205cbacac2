//! Cooperative vehicle localization over time-varying VANET graphs.
//!
//! Vehicles fuse noisy GPS with inter-vehicle range and azimuth readings
//! through the graph Laplacian. The centralized least-squares solve lives in
//! [`centralized`]; the distributed adapt-then-combine schemes (LMS, LMS with
//! measurement exchange, conjugate gradient) live in [`diffusion`]. The
//! [`simulator`] drives both over kinematic or recorded trajectories.

pub mod centralized;
pub mod config;
pub mod diffusion;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod output;
pub mod rng;
pub mod sensing;
pub mod simulator;
pub mod trajectory;

pub use centralized::{cll_solve, CllSolution};
pub use diffusion::{Algorithm, DelayMode, DelayPolicy, InitMode, InitPolicy};
pub use error::{Error, Result};
pub use graph::{CombinationMatrix, GraphConfig, VanetGraph};
pub use sensing::{DifferentialCoords, LinkNoise, MeasurementSet, NoiseConfig};
pub use simulator::{run_scenario, run_sweep, Method, MetricsRecord, ScenarioConfig};
pub use trajectory::{KinematicState, TrajectorySet};

/// A planar position in meters.
pub type Point = nalgebra::Point2<f64>;
