//! Steady saturated flow `div(K grad H) = 0` with prescribed-head and no-flow
//! boundaries.
//!
//! Two-point fluxes with harmonic-mean transmissibilities form an SPD
//! M-matrix; the off-diagonal (rotation-induced) conductivity terms enter
//! through tangential-gradient corrections. A banded LU preconditions GMRES
//! on the full operator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{diffusion_stencils, FaceKind, FaceStencil, Grid, Side};
use crate::linalg::{gmres, BandMatrix};
use crate::tensor::Tensor2;

/// Relative residual targeted by the linear solvers (row-scaled system).
pub const SOLVER_TOL: f64 = 1e-12;
/// Residual accepted when rounding stalls the iteration above the target.
pub const ACCEPT_TOL: f64 = 1e-10;
const RESTART: usize = 40;
const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellProps {
    /// Hydraulic conductivity tensor (m/s).
    pub conductivity: Tensor2,
    pub porosity: f64,
    /// Longitudinal and transverse dispersivities (m).
    pub alpha_l: f64,
    pub alpha_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryHead {
    pub head: f64,
    /// Index into [`Problem::segments`].
    pub segment: usize,
}

/// A discretized cross-section: cell properties and boundary heads.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub grid: Grid,
    pub cells: Vec<CellProps>,
    /// Names of the prescribed-head boundary segments.
    pub segments: Vec<String>,
    pub left: Vec<Option<BoundaryHead>>,
    pub right: Vec<Option<BoundaryHead>>,
    pub bottom: Vec<Option<BoundaryHead>>,
    pub top: Vec<Option<BoundaryHead>>,
    /// m^2/s
    pub molecular_diffusion: f64,
}

impl Problem {
    /// Closed box of uniform cells.
    pub fn uniform(grid: Grid, cell: CellProps, molecular_diffusion: f64) -> Self {
        Problem {
            grid,
            cells: vec![cell; grid.len()],
            segments: Vec::new(),
            left: vec![None; grid.nz],
            right: vec![None; grid.nz],
            bottom: vec![None; grid.nx],
            top: vec![None; grid.nx],
            molecular_diffusion,
        }
    }

    pub fn boundary(&self, side: Side, j: usize) -> Option<BoundaryHead> {
        match side {
            Side::Left => self.left[j],
            Side::Right => self.right[j],
            Side::Bottom => self.bottom[j],
            Side::Top => self.top[j],
        }
    }

    /// Register a segment name, returning its index.
    pub fn segment(&mut self, name: &str) -> usize {
        match self.segments.iter().position(|s| s == name) {
            Some(p) => p,
            None => {
                self.segments.push(name.to_string());
                self.segments.len() - 1
            }
        }
    }
}

/// Flux through one prescribed-head boundary face (m^2/s per unit width, outward positive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFlux {
    pub side: Side,
    pub index: usize,
    pub segment: usize,
    pub flux: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub head: Vec<f64>,
    /// Flux through x-faces (+x positive), indexed by [`Grid::xface`].
    pub xflux: Vec<f64>,
    /// Flux through z-faces (+z positive), indexed by [`Grid::zface`].
    pub zflux: Vec<f64>,
    pub boundary: Vec<BoundaryFlux>,
    pub iterations: usize,
    pub residual: f64,
}

impl FlowField {
    /// Darcy velocity at the cell center from the average of opposite faces (m/s).
    pub fn cell_velocity(&self, grid: &Grid, c: usize) -> [f64; 2] {
        let (i, k) = grid.ik(c);
        let qx = 0.5 * (self.xflux[grid.xface(i, k)] + self.xflux[grid.xface(i + 1, k)]) / grid.dz;
        let qz = 0.5 * (self.zflux[grid.zface(i, k)] + self.zflux[grid.zface(i, k + 1)]) / grid.dx;
        [qx, qz]
    }

    /// Net outward flux of every cell (zero up to solver tolerance).
    pub fn cell_imbalance(&self, grid: &Grid) -> Vec<f64> {
        (0..grid.len())
            .map(|c| {
                let (i, k) = grid.ik(c);
                self.xflux[grid.xface(i + 1, k)] - self.xflux[grid.xface(i, k)]
                    + self.zflux[grid.zface(i, k + 1)]
                    - self.zflux[grid.zface(i, k)]
            })
            .collect()
    }
}

/// Assemble `sum of outward face fluxes = 0` from stencils. Returns the full
/// operator (bandwidth `nz + 1`), its two-point part (bandwidth `nz`) and the
/// right-hand side.
pub(crate) fn assemble(grid: &Grid, stencils: &[FaceStencil]) -> (BandMatrix, BandMatrix, Vec<f64>) {
    let n = grid.len();
    let mut full = BandMatrix::zeros(n, grid.nz + 1, grid.nz + 1);
    let mut tpfa = BandMatrix::zeros(n, grid.nz, grid.nz);
    let mut rhs = vec![0.0; n];
    for s in stencils {
        let rows: &[(usize, f64)] = match s.kind {
            FaceKind::Interior { neighbor } => &[(s.owner, 1.0), (neighbor, -1.0)],
            FaceKind::Boundary { .. } => &[(s.owner, 1.0)],
        };
        for &(r, sign) in rows {
            for &(c, a) in &s.two_point {
                full.add(r, c, sign * a);
                tpfa.add(r, c, sign * a);
            }
            for &(c, a) in &s.cross {
                full.add(r, c, sign * a);
            }
            rhs[r] -= sign * s.constant;
        }
    }
    (full, tpfa, rhs)
}

/// Solve `full u = rhs` by GMRES preconditioned with a banded LU, after
/// scaling rows by the inverse diagonal of `tpfa`. `on_pivot` maps a failed
/// pivot of the two-point part to an error.
pub(crate) fn solve_system(
    mut full: BandMatrix,
    mut tpfa: BandMatrix,
    mut rhs: Vec<f64>,
    on_pivot: impl Fn(usize, f64) -> Error,
) -> Result<(Vec<f64>, usize, f64)> {
    let scale: Vec<f64> = tpfa
        .diagonal()
        .iter()
        .enumerate()
        .map(|(r, &d)| if d > 0.0 { Ok(1.0 / d) } else { Err(on_pivot(r, d)) })
        .collect::<Result<_>>()?;
    full.scale_rows(&scale);
    tpfa.scale_rows(&scale);
    rhs.iter_mut().zip(&scale).for_each(|(b, s)| *b *= s);
    // The full operator is factorized directly when its pivots stay positive;
    // the two-point M-matrix is the guaranteed fallback.
    let lu = match full.clone().factorize() {
        Ok(lu) => lu,
        Err(_) => tpfa.factorize().map_err(|(r, p)| on_pivot(r, p))?,
    };
    let mut u = rhs.clone();
    lu.solve_in_place(&mut u);
    let out = gmres(
        |v, y| full.matvec(v, y),
        |v| lu.solve_in_place(v),
        &rhs,
        &mut u,
        SOLVER_TOL,
        RESTART,
        MAX_ITERATIONS,
    );
    match out {
        Ok(o) => Ok((u, o.iterations, o.residual)),
        Err(Error::NotConverged { iterations, residual }) if residual <= ACCEPT_TOL => Ok((u, iterations, residual)),
        Err(e) => Err(e),
    }
}

/// Boundary flux with rounding noise flushed to zero, so that a face between
/// equal heads is neither an inlet nor an outlet.
fn boundary_flux(s: &FaceStencil, u: &[f64]) -> f64 {
    let f = s.eval(u);
    let scale: f64 = s.two_point.iter().map(|&(c, a)| (a * u[c]).abs()).sum::<f64>() + s.constant.abs();
    if f.abs() <= 64.0 * f64::EPSILON * scale {
        0.0
    } else {
        f
    }
}

/// Evaluate every stencil on `u` and scatter into face arrays.
pub(crate) fn face_fluxes(grid: &Grid, stencils: &[FaceStencil], u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut xf = vec![0.0; grid.n_xfaces()];
    let mut zf = vec![0.0; grid.n_zfaces()];
    for s in stencils {
        let f = match s.kind {
            FaceKind::Interior { .. } => s.eval(u),
            FaceKind::Boundary { .. } => boundary_flux(s, u),
        };
        let (i, k) = grid.ik(s.owner);
        match s.kind {
            FaceKind::Interior { neighbor } => {
                if grid.ik(neighbor).0 == i {
                    zf[grid.zface(i, k + 1)] = f;
                } else {
                    xf[grid.xface(i + 1, k)] = f;
                }
            }
            FaceKind::Boundary { side, .. } => match side {
                Side::Left => xf[grid.xface(0, k)] = -f,
                Side::Right => xf[grid.xface(grid.nx, k)] = f,
                Side::Bottom => zf[grid.zface(i, 0)] = -f,
                Side::Top => zf[grid.zface(i, grid.nz)] = f,
            },
        }
    }
    (xf, zf)
}

pub fn solve_flow(problem: &Problem) -> Result<FlowField> {
    let grid = &problem.grid;
    let k: Vec<Tensor2> = problem.cells.iter().map(|c| c.conductivity).collect();
    let stencils = diffusion_stencils(grid, &k, |side, j| problem.boundary(side, j).map(|b| b.head));
    let (full, tpfa, rhs) = assemble(grid, &stencils);
    if !tpfa.is_symmetric(1e-12) {
        return Err(Error::NonSpd { row: 0, pivot: f64::NAN });
    }
    let (head, iterations, residual) = if stencils.iter().any(|s| matches!(s.kind, FaceKind::Boundary { .. })) {
        solve_system(full, tpfa, rhs, |row, pivot| Error::NonSpd { row, pivot })?
    } else {
        // Closed box: head is defined only up to a constant and every flux vanishes.
        (vec![0.0; grid.len()], 0, 0.0)
    };
    let (xflux, zflux) = face_fluxes(grid, &stencils, &head);
    let boundary = stencils
        .iter()
        .filter_map(|s| match s.kind {
            FaceKind::Boundary { side, index } => Some(BoundaryFlux {
                side,
                index,
                segment: problem.boundary(side, index).expect("stencil exists").segment,
                flux: boundary_flux(s, &head),
            }),
            FaceKind::Interior { .. } => None,
        })
        .collect();
    Ok(FlowField {
        head,
        xflux,
        zflux,
        boundary,
        iterations,
        residual,
    })
}

/// Outflow and inflow per named boundary segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentFlux {
    pub name: String,
    pub outflow: f64,
    pub inflow: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutflowBudget {
    pub segments: Vec<SegmentFlux>,
    pub total_outflow: f64,
    pub total_inflow: f64,
}

impl OutflowBudget {
    /// Share of the total outflow leaving through segments whose names satisfy `pred`.
    pub fn fraction_where(&self, pred: impl Fn(&str) -> bool) -> f64 {
        if self.total_outflow == 0.0 {
            return 0.0;
        }
        self.segments
            .iter()
            .filter(|s| pred(&s.name))
            .map(|s| s.outflow)
            .sum::<f64>()
            / self.total_outflow
    }

    /// `|in - out| / in`.
    pub fn imbalance(&self) -> f64 {
        if self.total_inflow == 0.0 {
            return self.total_outflow;
        }
        (self.total_inflow - self.total_outflow).abs() / self.total_inflow
    }
}

pub fn outflow_budget(problem: &Problem, flow: &FlowField) -> OutflowBudget {
    let mut segments: Vec<SegmentFlux> = problem
        .segments
        .iter()
        .map(|n| SegmentFlux {
            name: n.clone(),
            outflow: 0.0,
            inflow: 0.0,
        })
        .collect();
    for b in &flow.boundary {
        let s = &mut segments[b.segment];
        if b.flux > 0.0 {
            s.outflow += b.flux;
        } else {
            s.inflow -= b.flux;
        }
    }
    let total_outflow = segments.iter().map(|s| s.outflow).sum();
    let total_inflow = segments.iter().map(|s| s.inflow).sum();
    OutflowBudget {
        segments,
        total_outflow,
        total_inflow,
    }
}
