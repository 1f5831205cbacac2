//! Conjugate-gradient adaptation with a forgetting factor.

use nalgebra::{DMatrix, DVector, DVectorView, DVectorViewMut};
use serde::{Deserialize, Serialize};

use crate::graph::VanetGraph;

/// Tikhonov term added to each local normal matrix.
pub const REGULARIZATION: f64 = 1e-7;
/// Directions with less curvature than this are treated as breakdowns.
const MIN_CURVATURE: f64 = 1e-14;
/// Directions whose Rayleigh quotient falls below this mostly probe the
/// regularizer's near-null space; stepping along them is a breakdown too.
const MIN_RAYLEIGH: f64 = 1e-3;
/// A local residual this small relative to ‖b‖ counts as solved.
const RESIDUAL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CgUpdate {
    /// g ← λg + b − A·w − α·A·r
    #[default]
    Standard,
    /// g ← λg + b − A·w + α·r: adds the step direction itself rather than
    /// its image under A. Kept for comparison; it does not converge.
    Additive,
}

/// Local normal equations and CG internals of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct CgState {
    /// A_i = U_iᵀU_i + εI over the agent's neighborhood rows.
    pub a: DMatrix<f64>,
    /// b_i = U_iᵀq_i, one column per axis.
    pub b: DMatrix<f64>,
    /// Negative gradient per axis.
    pub g: DMatrix<f64>,
    /// Search direction per axis.
    pub r: DMatrix<f64>,
}

impl CgState {
    /// Assemble agent `i`'s local problem from its own and its neighbors'
    /// Laplacian rows and measurements, then seed the gradient at `w`.
    pub fn new(graph: &VanetGraph, measurements: &DMatrix<f64>, i: usize, w: &DMatrix<f64>) -> Self {
        let n = graph.len();
        let mut a = DMatrix::identity(n, n) * REGULARIZATION;
        let mut b = DMatrix::zeros(n, 2);
        for l in graph.neighborhood(i) {
            let row = graph.laplacian_row(l).to_dense(n);
            let support: Vec<(usize, f64)> = row.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
            for &(p, rp) in &support {
                for &(q, rq) in &support {
                    a[(p, q)] += rp * rq;
                }
                for axis in 0..2 {
                    b[(p, axis)] += rp * measurements[(l, axis)];
                }
            }
        }
        Self::from_system(a, b, w)
    }

    pub fn from_system(a: DMatrix<f64>, b: DMatrix<f64>, w: &DMatrix<f64>) -> Self {
        let g = &b - &a * w;
        let r = g.clone();
        Self { a, b, g, r }
    }

    /// One CG step on every axis: returns ψ = w + α·r and advances (g, r).
    pub fn step(&mut self, w: &DMatrix<f64>, forgetting: f64, update: CgUpdate) -> DMatrix<f64> {
        let mut psi = w.clone();
        for axis in 0..2 {
            let a = &self.a;
            let (g, r) = (self.g.column_mut(axis), self.r.column_mut(axis));
            let step = axis_step(a, self.b.column(axis), w.column(axis), g, r, forgetting, update);
            psi.column_mut(axis).copy_from(&step);
        }
        psi
    }
}

fn curvature_ok(a: &DMatrix<f64>, v: &DVector<f64>) -> Option<(f64, DVector<f64>)> {
    let av = a * v;
    let curvature = v.dot(&av);
    (curvature > MIN_CURVATURE && curvature > MIN_RAYLEIGH * v.norm_squared()).then_some((curvature, av))
}

fn axis_step(
    a: &DMatrix<f64>,
    b: DVectorView<f64>,
    w: DVectorView<f64>,
    mut g_slot: DVectorViewMut<f64>,
    mut r_slot: DVectorViewMut<f64>,
    forgetting: f64,
    update: CgUpdate,
) -> DVector<f64> {
    let g = g_slot.clone_owned();
    let mut r = r_slot.clone_owned();
    let mut alpha = 0.0;
    let mut ar = DVector::zeros(g.len());
    if g.norm() > RESIDUAL_TOL * b.norm() {
        if r.dot(&g) <= 0.0 || curvature_ok(a, &r).is_none() {
            r.copy_from(&g);
        }
        if let Some((curvature, a_r)) = curvature_ok(a, &r) {
            alpha = r.dot(&g) / curvature;
            ar = a_r;
        }
    }
    let psi = w + &r * alpha;
    let residual = b - a * w;
    let g_next = match update {
        CgUpdate::Standard => &g * forgetting + residual - &ar * alpha,
        CgUpdate::Additive => &g * forgetting + residual + &r * alpha,
    };
    let gg = g.norm_squared();
    let beta = if gg > 0.0 {
        let polak_ribiere = (&g_next - &g).dot(&g_next) / gg;
        let fletcher_reeves = g_next.norm_squared() / gg;
        polak_ribiere.min(fletcher_reeves)
    } else {
        0.0
    };
    r = &g_next + r * beta;
    g_slot.copy_from(&g_next);
    r_slot.copy_from(&r);
    psi
}
