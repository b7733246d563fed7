//! Regular cell-centered grid over a rectangular x-z section and the
//! face-flux stencils of a tensor diffusion operator on it.

use serde::{Deserialize, Serialize};

use crate::tensor::Tensor2;

/// `nx * nz` cells of size `dx * dz`; cell `(i, k)` has index `i * nz + k`,
/// so the vertical index runs fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub nz: usize,
    pub dx: f64,
    pub dz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Grid {
    pub fn new(nx: usize, nz: usize, length: f64, height: f64) -> Self {
        Grid {
            nx,
            nz,
            dx: length / nx as f64,
            dz: height / nz as f64,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn cell(&self, i: usize, k: usize) -> usize {
        i * self.nz + k
    }

    #[inline]
    pub fn ik(&self, c: usize) -> (usize, usize) {
        (c / self.nz, c % self.nz)
    }

    pub fn x_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    pub fn z_center(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dz
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx * self.dz
    }

    /// Number of boundary faces on a side.
    pub fn side_len(&self, side: Side) -> usize {
        match side {
            Side::Left | Side::Right => self.nz,
            Side::Bottom | Side::Top => self.nx,
        }
    }

    /// Cell adjacent to boundary face `j` of `side`.
    pub fn boundary_cell(&self, side: Side, j: usize) -> usize {
        match side {
            Side::Left => self.cell(0, j),
            Side::Right => self.cell(self.nx - 1, j),
            Side::Bottom => self.cell(j, 0),
            Side::Top => self.cell(j, self.nz - 1),
        }
    }

    /// Index of the x-face `i` (0..=nx) in row `k`.
    #[inline]
    pub fn xface(&self, i: usize, k: usize) -> usize {
        i * self.nz + k
    }

    /// Index of the z-face `k` (0..=nz) in column `i`.
    #[inline]
    pub fn zface(&self, i: usize, k: usize) -> usize {
        i * (self.nz + 1) + k
    }

    pub fn n_xfaces(&self) -> usize {
        (self.nx + 1) * self.nz
    }

    pub fn n_zfaces(&self) -> usize {
        self.nx * (self.nz + 1)
    }
}

/// Where a face sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    /// Interior face, flux counted from `owner` (left/bottom) to `neighbor`.
    Interior { neighbor: usize },
    /// Boundary face with a prescribed value; flux counted outward.
    Boundary { side: Side, index: usize },
}

/// Linear expression of the flux through one face in terms of cell unknowns:
/// `flux = sum(two_point) + sum(cross) + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceStencil {
    pub owner: usize,
    pub kind: FaceKind,
    pub two_point: Vec<(usize, f64)>,
    pub cross: Vec<(usize, f64)>,
    pub constant: f64,
}

impl FaceStencil {
    pub fn eval(&self, u: &[f64]) -> f64 {
        let t: f64 = self.two_point.iter().map(|&(c, a)| a * u[c]).sum();
        let x: f64 = self.cross.iter().map(|&(c, a)| a * u[c]).sum();
        t + x + self.constant
    }
}

fn harmonic(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

/// Harmonic mean of two off-diagonal entries when they share a sign, zero otherwise.
fn harmonic_signed(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else {
        a.signum() * harmonic(a.abs(), b.abs())
    }
}

/// Stencil of the centered tangential derivative of `u` in cell `(i, k)`,
/// one-sided at the grid edges.
fn tangential(grid: &Grid, i: usize, k: usize, along_x: bool) -> Vec<(usize, f64)> {
    let (n, pos, h) = if along_x { (grid.nx, i, grid.dx) } else { (grid.nz, k, grid.dz) };
    let at = |p: usize| if along_x { grid.cell(p, k) } else { grid.cell(i, p) };
    if n == 1 {
        return Vec::new();
    }
    if pos == 0 {
        vec![(at(1), 1.0 / h), (at(0), -1.0 / h)]
    } else if pos == n - 1 {
        vec![(at(n - 1), 1.0 / h), (at(n - 2), -1.0 / h)]
    } else {
        vec![(at(pos + 1), 0.5 / h), (at(pos - 1), -0.5 / h)]
    }
}

/// Flux stencils of `-T grad u` for the per-cell tensor field `t`
/// (outward-positive on boundary faces, left/bottom-to-right/top on interior
/// faces). `dirichlet(side, j)` returns the prescribed boundary value of `u`
/// for faces that carry one; other boundary faces are closed and produce no
/// stencil. Boundary fluxes use the two-point part only.
pub fn diffusion_stencils(
    grid: &Grid,
    t: &[Tensor2],
    dirichlet: impl Fn(Side, usize) -> Option<f64>,
) -> Vec<FaceStencil> {
    let (nx, nz, dx, dz) = (grid.nx, grid.nz, grid.dx, grid.dz);
    let mut out = Vec::with_capacity(grid.n_xfaces() + grid.n_zfaces());
    // Vertical faces.
    for i in 1..nx {
        for k in 0..nz {
            let (a, b) = (grid.cell(i - 1, k), grid.cell(i, k));
            let tr = dz / dx * harmonic(t[a].xx, t[b].xx);
            let kxz = harmonic_signed(t[a].xz, t[b].xz);
            let mut cross = Vec::new();
            if kxz != 0.0 {
                for (c, w) in tangential(grid, i - 1, k, false)
                    .into_iter()
                    .chain(tangential(grid, i, k, false))
                {
                    cross.push((c, -dz * kxz * 0.5 * w));
                }
            }
            out.push(FaceStencil {
                owner: a,
                kind: FaceKind::Interior { neighbor: b },
                two_point: vec![(a, tr), (b, -tr)],
                cross,
                constant: 0.0,
            });
        }
    }
    // Horizontal faces.
    for i in 0..nx {
        for k in 1..nz {
            let (a, b) = (grid.cell(i, k - 1), grid.cell(i, k));
            let tr = dx / dz * harmonic(t[a].zz, t[b].zz);
            let kxz = harmonic_signed(t[a].xz, t[b].xz);
            let mut cross = Vec::new();
            if kxz != 0.0 {
                for (c, w) in tangential(grid, i, k - 1, true)
                    .into_iter()
                    .chain(tangential(grid, i, k, true))
                {
                    cross.push((c, -dx * kxz * 0.5 * w));
                }
            }
            out.push(FaceStencil {
                owner: a,
                kind: FaceKind::Interior { neighbor: b },
                two_point: vec![(a, tr), (b, -tr)],
                cross,
                constant: 0.0,
            });
        }
    }
    for side in [Side::Left, Side::Right, Side::Bottom, Side::Top] {
        for j in 0..grid.side_len(side) {
            let Some(value) = dirichlet(side, j) else { continue };
            let c = grid.boundary_cell(side, j);
            let tr = match side {
                Side::Left | Side::Right => dz * t[c].xx / (0.5 * dx),
                Side::Bottom | Side::Top => dx * t[c].zz / (0.5 * dz),
            };
            out.push(FaceStencil {
                owner: c,
                kind: FaceKind::Boundary { side, index: j },
                two_point: vec![(c, tr)],
                cross: Vec::new(),
                constant: -tr * value,
            });
        }
    }
    out
}
