//! Pipeline driver: sample a Latin hypercube design, evaluate a model on it,
//! fit a sparse polynomial chaos expansion and report Sobol' indices.

pub mod config;
pub mod evaluator;
pub mod pipeline;

pub use config::RunConfig;
pub use evaluator::Evaluator;
