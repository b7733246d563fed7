//! Steady mean lifetime expectancy: `-q . grad E - div(phi D grad E) = phi`,
//! the first moment of the backward (reversed-flow) transport problem.
//!
//! `E = 0` on prescribed-head faces that the physical flow leaves through;
//! every other boundary face carries zero flux. Advection is upwinded with
//! respect to the reversed flow, i.e. each face takes the value of its
//! physically downstream cell.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::data::TargetZone;
use crate::error::{Error, Result};
use crate::flow::{assemble, solve_system, FlowField, Problem};
use crate::grid::{diffusion_stencils, FaceKind, Grid, Side};
use crate::tensor::{dispersion_tensor, Tensor2};

/// Tolerated negative undershoot, relative to the largest lifetime.
const NEGATIVE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct MleField {
    /// Lifetime expectancy per cell (years).
    pub years: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// `phi D` per cell from the cell-centered Darcy velocity.
pub fn dispersion_field(problem: &Problem, flow: &FlowField) -> Vec<Tensor2> {
    let grid = &problem.grid;
    problem
        .cells
        .iter()
        .enumerate()
        .map(|(c, p)| {
            let q = flow.cell_velocity(grid, c);
            dispersion_tensor(q, p.porosity, p.alpha_l, p.alpha_t, problem.molecular_diffusion)
        })
        .collect()
}

pub fn solve_mle(problem: &Problem, flow: &FlowField, seconds_per_year: f64) -> Result<MleField> {
    let grid = &problem.grid;
    let outward: HashMap<(Side, usize), f64> = flow.boundary.iter().map(|b| ((b.side, b.index), b.flux)).collect();
    let absorbing = |side: Side, j: usize| outward.get(&(side, j)).is_some_and(|&f| f >= 0.0);

    let d = dispersion_field(problem, flow);
    let stencils = diffusion_stencils(grid, &d, |side, j| absorbing(side, j).then_some(0.0));
    if !stencils.iter().any(|s| matches!(s.kind, FaceKind::Boundary { .. })) {
        return Err(Error::InvalidData("lifetime problem has no outlet".into()));
    }
    let (mut full, mut m, _) = assemble(grid, &stencils);

    let mut upwind = |from: usize, to: usize, f: f64| {
        // Row of the physically upstream cell looks at its downstream neighbor.
        let (up, down, f) = if f > 0.0 { (from, to, f) } else { (to, from, -f) };
        for a in [&mut full, &mut m] {
            a.add(up, up, f);
            a.add(up, down, -f);
        }
    };
    for i in 1..grid.nx {
        for k in 0..grid.nz {
            upwind(grid.cell(i - 1, k), grid.cell(i, k), flow.xflux[grid.xface(i, k)]);
        }
    }
    for i in 0..grid.nx {
        for k in 1..grid.nz {
            upwind(grid.cell(i, k - 1), grid.cell(i, k), flow.zflux[grid.zface(i, k)]);
        }
    }
    for b in &flow.boundary {
        if b.flux > 0.0 {
            let c = grid.boundary_cell(b.side, b.index);
            full.add(c, c, b.flux);
            m.add(c, c, b.flux);
        }
    }

    let rhs: Vec<f64> = problem.cells.iter().map(|p| p.porosity * grid.cell_volume()).collect();
    let (e, iterations, residual) = solve_system(full, m, rhs, |row, pivot| Error::SingularPivot { row, pivot })?;

    let max = e.iter().cloned().fold(0.0, f64::max);
    if let Some((cell, &value)) = e.iter().enumerate().find(|(_, &v)| v < -NEGATIVE_TOL * max) {
        return Err(Error::NegativeLifetime { cell, value, max });
    }
    Ok(MleField {
        years: e.iter().map(|v| v.max(0.0) / seconds_per_year).collect(),
        iterations,
        residual,
    })
}

/// Cells whose centers lie in the target rectangle (bounds inclusive).
pub fn target_cells(grid: &Grid, tz: &TargetZone) -> Result<Vec<usize>> {
    let inside = |v: f64, r: [f64; 2]| r[0] <= v && v <= r[1];
    let cells: Vec<usize> = (0..grid.len())
        .filter(|&c| {
            let (i, k) = grid.ik(c);
            inside(grid.x_center(i), tz.x) && inside(grid.z_center(k), tz.z)
        })
        .collect();
    if cells.is_empty() {
        return Err(Error::EmptyTargetZone);
    }
    Ok(cells)
}

/// Arithmetic mean of the lifetime over `cells`.
pub fn response_at(mle: &MleField, cells: &[usize]) -> f64 {
    cells.iter().map(|&c| mle.years[c]).sum::<f64>() / cells.len() as f64
}

/// Summary of a solved field, handy for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleSummary {
    pub min: f64,
    pub max: f64,
    pub response: f64,
}

impl MleSummary {
    pub fn new(mle: &MleField, cells: &[usize]) -> Self {
        MleSummary {
            min: mle.years.iter().cloned().fold(f64::INFINITY, f64::min),
            max: mle.years.iter().cloned().fold(0.0, f64::max),
            response: response_at(mle, cells),
        }
    }
}
