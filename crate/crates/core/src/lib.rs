//! Sparse polynomial chaos expansions and variance-based sensitivity analysis.
//!
//! The crate covers the full chain: input probability models, Latin hypercube
//! designs, orthonormal chaos bases truncated by hyperbolic norms, sparse
//! regression by hybrid Least Angle Regression with leave-one-out model
//! selection, and Sobol' indices read off the expansion coefficients.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default) and sequentially otherwise.

pub mod basis;
pub mod error;
pub mod models;
pub mod par;
pub mod probability;
pub mod regression;
pub mod sampling;
pub mod sensitivity;

pub use error::{Error, Result};
pub use probability::{Marginal, PhysicalPoint, RandomVector, StandardPoint, Variable};
pub use regression::{adaptive_fit, hybrid_fit, AdaptiveOptions, FitOptions, ResponseScale, SparsePce};
pub use sampling::{lhs, nested_lhs_enrich, ExperimentalDesign};
pub use sensitivity::SobolReport;

/// Whether data-parallel loops run on rayon.
pub fn parallel_enabled() -> bool {
    par::is_parallel()
}
