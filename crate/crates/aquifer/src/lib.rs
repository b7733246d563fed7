//! Two-dimensional vertical cross-section of a layered aquifer system:
//! steady Darcy flow followed by the steady mean lifetime expectancy, reduced
//! to a scalar response over a target zone in the confining layer.

pub mod data;
pub mod error;
pub mod flow;
pub mod grid;
pub mod linalg;
pub mod mle;
pub mod model;
pub mod params;
pub mod tensor;

pub use data::ModelData;
pub use error::{Error, Result};
pub use flow::{outflow_budget, solve_flow, FlowField, OutflowBudget, Problem};
pub use mle::{solve_mle, MleField};
pub use model::{CrossSectionModel, Solution};
pub use params::{parameter_specs, random_vector, ParameterSpec, Parameters};
pub use tensor::{dispersion_tensor, rotate_tensor, Tensor2};
