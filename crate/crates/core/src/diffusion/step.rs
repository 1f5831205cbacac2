//! Adaptation step sizes.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::graph::{CombinationMatrix, VanetGraph};
use crate::{Error, Result};

const STEP_CAP: f64 = 0.1;

/// μ₁ = min(0.1, 2/(d² + d)); `None` for an isolated vehicle.
pub fn step_size_gllms(graph: &VanetGraph, i: usize) -> Option<f64> {
    lms_bound(graph, i).map(|b| b.min(STEP_CAP))
}

fn lms_bound(graph: &VanetGraph, i: usize) -> Option<f64> {
    let norm = graph.laplacian_row(i).norm_squared();
    (norm > 0.0).then(|| 2.0 / norm)
}

/// Σ_{l∈𝒩_i} c_il·L_lᵀL_l, the exchange-weighted regressor covariance of agent i.
pub fn exchange_covariance(graph: &VanetGraph, weights: &CombinationMatrix, i: usize) -> DMatrix<f64> {
    let n = graph.len();
    let mut cov = DMatrix::zeros(n, n);
    for l in graph.neighborhood(i) {
        let row = graph.laplacian_row(l).to_dense(n);
        let c = weights.weight(i, l);
        for (a, &ra) in row.iter().enumerate().filter(|(_, v)| **v != 0.0) {
            for (b, &rb) in row.iter().enumerate().filter(|(_, v)| **v != 0.0) {
                cov[(a, b)] += c * ra * rb;
            }
        }
    }
    cov
}

/// μ₂ = min(0.1, 2/λ_max(Σ_l c_il·L_lᵀL_l)); `None` for an isolated vehicle.
pub fn step_size_gllme(graph: &VanetGraph, weights: &CombinationMatrix, i: usize) -> Option<f64> {
    exchange_bound(graph, weights, i).map(|b| b.min(STEP_CAP))
}

fn exchange_bound(graph: &VanetGraph, weights: &CombinationMatrix, i: usize) -> Option<f64> {
    if graph.degree(i) == 0 {
        return None;
    }
    let lambda_max = SymmetricEigen::new(exchange_covariance(graph, weights, i))
        .eigenvalues
        .max();
    Some(2.0 / lambda_max)
}

/// The sufficient bound 2/max_{l∈𝒩_i}(d_l² + d_l) for GLLME stability.
pub fn gllme_sufficient_bound(graph: &VanetGraph, i: usize) -> Option<f64> {
    if graph.degree(i) == 0 {
        return None;
    }
    let worst = graph
        .neighborhood(i)
        .map(|l| graph.laplacian_row(l).norm_squared())
        .fold(0.0, f64::max);
    Some(2.0 / worst)
}

/// How per-vehicle step sizes are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSizeRule {
    /// Capped eigenvalue rule.
    #[default]
    Optimal,
    /// The capped rule multiplied by a factor.
    Scaled(f64),
    /// The same constant for every vehicle.
    Fixed(f64),
    /// The uncapped stability bound (2/‖L_i‖² for LMS, the neighborhood
    /// bound for the exchange variant).
    Bound,
}

impl StepSizeRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StepSizeRule::Scaled(v) | StepSizeRule::Fixed(v) if !(v.is_finite() && v > 0.0) => {
                Err(Error::Config(format!("diffusion.step_size value must be positive, got {v}")))
            }
            _ => Ok(()),
        }
    }
}

/// Per-vehicle step sizes for one time step; `None` marks isolated vehicles.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSizes {
    pub mu1: Vec<Option<f64>>,
    pub mu2: Vec<Option<f64>>,
}

impl StepSizes {
    pub fn compute(graph: &VanetGraph, weights: &CombinationMatrix, rule: StepSizeRule) -> Self {
        let n = graph.len();
        let (mu1, mu2) = (0..n)
            .map(|i| match rule {
                StepSizeRule::Optimal => (step_size_gllms(graph, i), step_size_gllme(graph, weights, i)),
                StepSizeRule::Scaled(f) => (
                    step_size_gllms(graph, i).map(|m| f * m),
                    step_size_gllme(graph, weights, i).map(|m| f * m),
                ),
                StepSizeRule::Fixed(v) => {
                    let mu = (graph.degree(i) > 0).then_some(v);
                    (mu, mu)
                }
                StepSizeRule::Bound => (lms_bound(graph, i), gllme_sufficient_bound(graph, i)),
            })
            .unzip();
        Self { mu1, mu2 }
    }
}
