//! Parameter vector in, target-zone lifetime out.

use std::io::Write;

use crate::data::{BoundaryKind, ModelData};
use crate::error::{Error, Result};
use crate::flow::{outflow_budget, solve_flow, BoundaryHead, CellProps, FlowField, OutflowBudget, Problem};
use crate::grid::Grid;
use crate::mle::{response_at, solve_mle, target_cells, MleField};
use crate::params::{parameter_specs, ParameterSpec, Parameters};
use crate::tensor::rotate_tensor;

#[derive(Debug, Clone)]
pub struct CrossSectionModel {
    data: ModelData,
    grid: Grid,
    /// Layer index of every cell, by cell center.
    layer_of_cell: Vec<usize>,
    target: Vec<usize>,
    specs: Vec<ParameterSpec>,
}

/// Everything computed by one forward run.
#[derive(Debug, Clone)]
pub struct Solution {
    pub problem: Problem,
    pub flow: FlowField,
    pub mle: MleField,
    pub budget: OutflowBudget,
    /// Mean lifetime over the target zone (years).
    pub response: f64,
}

impl CrossSectionModel {
    pub fn new(data: ModelData) -> Result<Self> {
        let (nx, nz) = (data.grid.nx, data.grid.nz);
        Self::with_resolution(data, nx, nz)
    }

    pub fn bundled() -> Self {
        Self::new(ModelData::bundled()).expect("bundled model is valid")
    }

    pub fn with_resolution(data: ModelData, nx: usize, nz: usize) -> Result<Self> {
        data.validate()?;
        if nx == 0 || nz == 0 {
            return Err(Error::InvalidData("grid must have at least one cell per direction".into()));
        }
        let grid = Grid::new(nx, nz, data.domain.length, data.domain.height);
        let layer_of_z: Vec<usize> = (0..nz)
            .map(|k| {
                let z = grid.z_center(k);
                data.layers
                    .iter()
                    .position(|l| l.bottom <= z && z < l.top)
                    .expect("layers tile the domain")
            })
            .collect();
        let layer_of_cell = (0..grid.len()).map(|c| layer_of_z[grid.ik(c).1]).collect();
        let target = target_cells(&grid, &data.target_zone)?;
        let specs = parameter_specs(&data);
        Ok(CrossSectionModel {
            data,
            grid,
            layer_of_cell,
            target,
            specs,
        })
    }

    pub fn data(&self) -> &ModelData {
        &self.data
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn parameter_specs(&self) -> &[ParameterSpec] {
        &self.specs
    }

    pub fn dim(&self) -> usize {
        self.specs.len()
    }

    pub fn nominal(&self) -> Vec<f64> {
        self.specs.iter().map(|s| s.nominal).collect()
    }

    pub fn target_cells(&self) -> &[usize] {
        &self.target
    }

    pub fn layer_of_cell(&self, c: usize) -> &str {
        &self.data.layers[self.layer_of_cell[c]].name
    }

    /// Discretize the cross-section for one parameter set.
    pub fn problem(&self, params: &Parameters) -> Result<Problem> {
        let data = &self.data;
        let grid = self.grid;
        let mut layer_props = Vec::with_capacity(data.layers.len());
        for (layer, p) in data.layers.iter().zip(&params.layers) {
            let kx = layer.petrofacies_kx(p.phi)?;
            layer_props.push(CellProps {
                conductivity: rotate_tensor(kx, p.anisotropy_k * kx, p.theta),
                porosity: p.phi,
                alpha_l: p.alpha_l,
                alpha_t: p.anisotropy_alpha * p.alpha_l,
            });
        }
        let mut problem = Problem::uniform(grid, layer_props[0], data.transport.molecular_diffusion);
        for (c, cell) in problem.cells.iter_mut().enumerate() {
            *cell = layer_props[self.layer_of_cell[c]];
        }
        let length = data.domain.length;
        for (b, &gradient) in data.zones().into_iter().zip(&params.gradients) {
            match b.kind {
                BoundaryKind::Lateral => {
                    let [z0, z1] = b.z.expect("validated");
                    let left = problem.segment(&format!("{}_left", b.name));
                    let right = problem.segment(&format!("{}_right", b.name));
                    for k in 0..grid.nz {
                        let z = grid.z_center(k);
                        if z0 <= z && z <= z1 {
                            problem.left[k] = Some(BoundaryHead {
                                head: b.mean_head - 0.5 * gradient * length,
                                segment: left,
                            });
                            problem.right[k] = Some(BoundaryHead {
                                head: b.mean_head + 0.5 * gradient * length,
                                segment: right,
                            });
                        }
                    }
                }
                BoundaryKind::Top => {
                    let s = problem.segment(&b.name);
                    for i in 0..grid.nx {
                        problem.top[i] = Some(BoundaryHead {
                            head: b.mean_head + gradient * (grid.x_center(i) - 0.5 * length),
                            segment: s,
                        });
                    }
                }
            }
        }
        Ok(problem)
    }

    pub fn run(&self, values: &[f64]) -> Result<Solution> {
        let params = Parameters::from_slice(&self.data, values)?;
        let problem = self.problem(&params)?;
        let flow = solve_flow(&problem)?;
        let mle = solve_mle(&problem, &flow, self.data.transport.seconds_per_year)?;
        let budget = outflow_budget(&problem, &flow);
        let response = response_at(&mle, &self.target);
        Ok(Solution {
            problem,
            flow,
            mle,
            budget,
            response,
        })
    }

    /// Mean lifetime over the target zone (years).
    pub fn evaluate(&self, values: &[f64]) -> Result<f64> {
        Ok(self.run(values)?.response)
    }

    /// Outflow share per boundary zone name, in zone order.
    pub fn outflow_fractions(&self, budget: &OutflowBudget) -> Vec<(String, f64)> {
        self.data
            .zones()
            .into_iter()
            .map(|b| {
                let f = budget.fraction_where(|s| s == b.name || s.strip_suffix("_left") == Some(&b.name) || s.strip_suffix("_right") == Some(&b.name));
                (b.name.clone(), f)
            })
            .collect()
    }

    /// Cell-centered `x,z,layer,H,E` table.
    pub fn write_field_csv<W: Write>(&self, solution: &Solution, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "z", "layer", "H", "E"])?;
        for c in 0..self.grid.len() {
            let (i, k) = self.grid.ik(c);
            w.write_record([
                self.grid.x_center(i).to_string(),
                self.grid.z_center(k).to_string(),
                self.layer_of_cell(c).to_string(),
                solution.flow.head[c].to_string(),
                solution.mle.years[c].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
