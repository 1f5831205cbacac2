//! Centralized Laplacian localization: the anchored least-squares baseline.

use nalgebra::DMatrix;

use crate::graph::VanetGraph;
use crate::sensing::DifferentialCoords;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CllSolution {
    /// N×2 position estimates.
    pub positions: DMatrix<f64>,
    /// ‖L̃x − s‖ for the x and y axes.
    pub residual_norm: [f64; 2],
}

/// Solve L̃·x = [D·δ; z_p] per axis in the least-squares sense via QR.
pub fn cll_solve(graph: &VanetGraph, diffs: &DifferentialCoords, gps: &DMatrix<f64>) -> Result<CllSolution> {
    let n = graph.len();
    if diffs.len() != n || gps.shape() != (n, 2) {
        return Err(Error::InvalidInput(format!(
            "graph has {n} vehicles but differentials cover {} and anchors are {}x{}",
            diffs.len(),
            gps.nrows(),
            gps.ncols()
        )));
    }
    let system = graph.extended_laplacian();
    let mut rhs = DMatrix::zeros(2 * n, 2);
    rhs.view_mut((0, 0), (n, 2)).copy_from(&diffs.scaled(graph));
    rhs.view_mut((n, 0), (n, 2)).copy_from(gps);

    let qr = system.clone().qr();
    let projected = qr.q().transpose() * &rhs;
    let positions = qr
        .r()
        .solve_upper_triangular(&projected)
        .ok_or_else(|| Error::InvalidInput("extended Laplacian lost full column rank".into()))?;
    let residual = &system * &positions - rhs;
    Ok(CllSolution {
        residual_norm: [residual.column(0).norm(), residual.column(1).norm()],
        positions,
    })
}
