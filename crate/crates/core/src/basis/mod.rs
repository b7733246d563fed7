//! Orthonormal polynomial chaos basis: univariate families, hyperbolic
//! multi-index sets and tensorized evaluation.

mod design;
mod multi_index;
mod polynomial;

pub use design::{basis_matrix, eval_basis_row, BasisRow};
pub use multi_index::{count_total_degree, enumerate_hyperbolic, MultiIndex, MultiIndexSet, Truncation};
pub use polynomial::{eval_orthonormal_1d, Family};
