//! VANET graph construction and the operators derived from it.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::{Error, Point, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphConfig {
    /// Direct communication range in meters.
    pub comm_range: f64,
    /// Cap on the closest neighbors each vehicle keeps.
    pub max_neighbors: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            comm_range: 20.0,
            max_neighbors: 6,
        }
    }
}

impl GraphConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.comm_range.is_finite() && self.comm_range > 0.0) {
            return Err(Error::Config(format!(
                "graph.comm_range must be positive, got {}",
                self.comm_range
            )));
        }
        if self.max_neighbors == 0 {
            return Err(Error::Config("graph.max_neighbors must be at least 1".into()));
        }
        Ok(())
    }
}

/// Undirected, unweighted communication graph for one time step.
///
/// Neighbor lists are sorted by vehicle index and never contain the vehicle
/// itself; the neighborhood 𝒩_i is the vehicle plus its neighbors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VanetGraph {
    neighbors: Vec<Vec<usize>>,
}

impl VanetGraph {
    /// Connect vehicles within range that keep each other among their
    /// `max_neighbors` closest candidates.
    pub fn build(positions: &[Point], cfg: &GraphConfig) -> Result<Self> {
        cfg.validate()?;
        if let Some(i) = positions.iter().position(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::InvalidInput(format!("position of vehicle {i} is not finite")));
        }
        let n = positions.len();
        let kept: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut candidates: Vec<(f64, usize)> = (0..n)
                    .filter(|&l| l != i)
                    .map(|l| ((positions[l] - positions[i]).norm(), l))
                    .filter(|&(d, _)| d <= cfg.comm_range)
                    .collect();
                candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                candidates.truncate(cfg.max_neighbors);
                let mut ids: Vec<usize> = candidates.into_iter().map(|(_, l)| l).collect();
                ids.sort_unstable();
                ids
            })
            .collect();
        let neighbors = (0..n)
            .map(|i| {
                kept[i]
                    .iter()
                    .copied()
                    .filter(|&l| kept[l].binary_search(&i).is_ok())
                    .collect()
            })
            .collect();
        Ok(Self { neighbors })
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n || a == b {
                return Err(Error::InvalidInput(format!("invalid edge ({a}, {b}) for {n} vehicles")));
            }
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { neighbors })
    }

    pub fn complete(n: usize) -> Self {
        Self {
            neighbors: (0..n).map(|i| (0..n).filter(|&l| l != i).collect()).collect(),
        }
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges).expect("path edges are valid")
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// d_i, the neighbor count excluding the vehicle itself.
    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    /// |𝒩_i| = d_i + 1.
    pub fn neighborhood_size(&self, i: usize) -> usize {
        self.neighbors[i].len() + 1
    }

    /// The vehicle first, then its neighbors in ascending order.
    pub fn neighborhood(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(i).chain(self.neighbors[i].iter().copied())
    }

    pub fn has_edge(&self, i: usize, l: usize) -> bool {
        self.neighbors[i].binary_search(&l).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, ns)| ns.iter().filter(move |&&l| l > i).map(move |&l| (i, l)))
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn mean_degree(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.neighbors.iter().map(Vec::len).sum::<usize>() as f64 / self.len() as f64
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, l| if self.has_edge(i, l) { 1.0 } else { 0.0 })
    }

    pub fn degree_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, l| if i == l { self.degree(i) as f64 } else { 0.0 })
    }

    /// L = D − V.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, l| {
            if i == l {
                self.degree(i) as f64
            } else if self.has_edge(i, l) {
                -1.0
            } else {
                0.0
            }
        })
    }

    /// L̃ = [L; I], the 2N×N anchored system matrix.
    pub fn extended_laplacian(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut ext = DMatrix::zeros(2 * n, n);
        ext.view_mut((0, 0), (n, n)).copy_from(&self.laplacian());
        ext.view_mut((n, 0), (n, n)).fill_with_identity();
        ext
    }

    /// Row i of L as a sparse view.
    pub fn laplacian_row(&self, i: usize) -> LaplacianRow<'_> {
        LaplacianRow {
            index: i,
            neighbors: &self.neighbors[i],
        }
    }

    /// Metropolis weights c_il = 1 / max(|𝒩_i|, |𝒩_l|) with the self-weight
    /// taking up the remainder of each row.
    pub fn metropolis_weights(&self) -> CombinationMatrix {
        let n = self.len();
        let mut weights = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut off = 0.0;
            for &l in &self.neighbors[i] {
                let c = 1.0 / self.neighborhood_size(i).max(self.neighborhood_size(l)) as f64;
                weights[(i, l)] = c;
                off += c;
            }
            weights[(i, i)] = 1.0 - off;
        }
        CombinationMatrix { weights }
    }

    /// Eigenvalues of L in ascending order.
    pub fn laplacian_spectrum(&self) -> Vec<f64> {
        let mut values: Vec<f64> = SymmetricEigen::new(self.laplacian()).eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    /// λ₂(L), the algebraic connectivity. Positive iff the graph is connected.
    pub fn algebraic_connectivity(&self) -> Result<f64> {
        if self.len() < 2 {
            return Err(Error::InvalidInput(
                "algebraic connectivity needs at least two vehicles".into(),
            ));
        }
        let lambda2 = self.laplacian_spectrum()[1];
        Ok(if lambda2 < 1e-10 { 0.0 } else { lambda2 })
    }

    /// Connected component containing `root`, sorted ascending.
    pub fn component_of(&self, root: usize) -> Vec<usize> {
        let mut seen = vec![false; self.len()];
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(i) = stack.pop() {
            for &l in &self.neighbors[i] {
                if !seen[l] {
                    seen[l] = true;
                    stack.push(l);
                }
            }
        }
        (0..self.len()).filter(|&i| seen[i]).collect()
    }

    pub fn is_connected(&self) -> bool {
        self.is_empty() || self.component_of(0).len() == self.len()
    }

    /// Induced subgraph on `members` (sorted), reindexed to 0..members.len().
    pub fn subgraph(&self, members: &[usize]) -> Self {
        let neighbors = members
            .iter()
            .map(|&i| {
                self.neighbors[i]
                    .iter()
                    .filter_map(|l| members.binary_search(l).ok())
                    .collect()
            })
            .collect();
        Self { neighbors }
    }
}

/// Row i of the Laplacian: `d_i` on the diagonal, −1 at each neighbor.
#[derive(Debug, Clone, Copy)]
pub struct LaplacianRow<'a> {
    pub index: usize,
    pub neighbors: &'a [usize],
}

impl LaplacianRow<'_> {
    pub fn degree(&self) -> f64 {
        self.neighbors.len() as f64
    }

    /// L_i · w for one column of an estimate matrix.
    pub fn dot(&self, w: &[f64]) -> f64 {
        self.degree() * w[self.index] - self.neighbors.iter().map(|&l| w[l]).sum::<f64>()
    }

    /// out += scale · L_iᵀ.
    pub fn axpy(&self, scale: f64, out: &mut [f64]) {
        out[self.index] += scale * self.degree();
        for &l in self.neighbors {
            out[l] -= scale;
        }
    }

    /// ‖L_i‖² = d² + d, the only nonzero eigenvalue of L_iᵀL_i.
    pub fn norm_squared(&self) -> f64 {
        let d = self.degree();
        d * d + d
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut row = vec![0.0; n];
        self.axpy(1.0, &mut row);
        row
    }
}

/// Row-stochastic combination weights used in the combine step.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinationMatrix {
    weights: DMatrix<f64>,
}

impl CombinationMatrix {
    pub fn weight(&self, i: usize, l: usize) -> f64 {
        self.weights[(i, l)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}
