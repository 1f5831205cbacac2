//! Warm starts across time steps.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::graph::VanetGraph;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Every entry starts from the GPS reading.
    Gps,
    /// Neighbor entries reuse the previous step's solution.
    #[default]
    Coherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitPolicy {
    pub mode: InitMode,
    /// Neighborhood fraction |𝒩_i|/N below which every neighbor is warm-started.
    pub threshold: f64,
}

impl Default for InitPolicy {
    fn default() -> Self {
        Self {
            mode: InitMode::Coherent,
            threshold: 0.8,
        }
    }
}

impl InitPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!("init.threshold must lie in [0, 1], got {}", self.threshold)));
        }
        Ok(())
    }
}

/// Initial estimate matrix for agent `i`.
///
/// Own and non-neighbor rows come from GPS. In coherent mode, a sparse
/// neighborhood takes every neighbor row from `previous`; a dense one takes
/// only the first half of its neighbors (by id) and the rest from GPS.
pub fn coherent_init(
    i: usize,
    graph: &VanetGraph,
    gps: &DMatrix<f64>,
    previous: Option<&DMatrix<f64>>,
    policy: &InitPolicy,
) -> DMatrix<f64> {
    let mut w = gps.clone();
    let Some(prev) = previous.filter(|_| policy.mode == InitMode::Coherent) else {
        return w;
    };
    let neighbors = graph.neighbors(i);
    let ratio = graph.neighborhood_size(i) as f64 / graph.len() as f64;
    let warm = if ratio < policy.threshold {
        neighbors.len()
    } else {
        neighbors.len().div_ceil(2)
    };
    for &l in &neighbors[..warm] {
        w.set_row(l, &prev.row(l));
    }
    w
}

/// Whether the set of participating vehicles changed between two steps.
pub fn reset_on_membership_change(previous: &[u64], current: &[u64]) -> bool {
    previous.iter().collect::<BTreeSet<_>>() != current.iter().collect::<BTreeSet<_>>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gps(n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, 2, |i, c| (10 * i + c) as f64)
    }

    fn prev(n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, 2, |i, c| -((10 * i + c) as f64) - 1.0)
    }

    #[test]
    fn gps_mode_and_first_step() {
        let g = VanetGraph::complete(4);
        let z = gps(4);
        assert_eq!(coherent_init(0, &g, &z, None, &InitPolicy::default()), z);
        let p = prev(4);
        let policy = InitPolicy {
            mode: InitMode::Gps,
            ..Default::default()
        };
        assert_eq!(coherent_init(0, &g, &z, Some(&p), &policy), z);
    }

    #[test]
    fn sparse_neighborhood_takes_all_neighbors() {
        let g = VanetGraph::from_edges(10, &[(0, 3), (0, 5), (0, 8), (1, 2)]).unwrap();
        let (z, p) = (gps(10), prev(10));
        let w = coherent_init(0, &g, &z, Some(&p), &InitPolicy::default());
        for r in 0..10 {
            let want = if [3, 5, 8].contains(&r) { p.row(r) } else { z.row(r) };
            assert_eq!(w.row(r), want, "row {r}");
        }
    }

    #[test]
    fn dense_neighborhood_splits_in_half() {
        let g = VanetGraph::complete(4);
        let (z, p) = (gps(4), prev(4));
        let w = coherent_init(0, &g, &z, Some(&p), &InitPolicy::default());
        assert_eq!(w.row(0), z.row(0));
        assert_eq!(w.row(1), p.row(1));
        assert_eq!(w.row(2), p.row(2));
        assert_eq!(w.row(3), z.row(3));
    }

    #[test]
    fn membership_changes() {
        assert!(!reset_on_membership_change(&[1, 2, 3], &[3, 2, 1]));
        assert!(reset_on_membership_change(&[1, 2, 3], &[1, 2]));
        assert!(reset_on_membership_change(&[1, 2, 3], &[1, 2, 4]));
    }
}
