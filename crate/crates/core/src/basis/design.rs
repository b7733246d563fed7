//! Evaluation of tensorized basis functions at standard-space points.

use ndarray::{Array2, ArrayView2, ShapeBuilder};

use super::{Family, MultiIndexSet};
use crate::error::{Error, Result};
use crate::par;
use crate::probability::StandardPoint;

/// `Psi_alpha(u)` for every member of a multi-index set, in set order.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisRow(pub Vec<f64>);

/// Univariate values `psi_d(u_i)` for every coordinate and degree up to `max_degree`.
struct UnivariateTable {
    stride: usize,
    values: Vec<f64>,
}

impl UnivariateTable {
    fn new(u: &[f64], families: &[Family], max_degree: usize) -> Self {
        let stride = max_degree + 1;
        let mut values = vec![0.0; u.len() * stride];
        for (i, (&ui, fam)) in u.iter().zip(families).enumerate() {
            fam.eval_all_unchecked(ui, &mut values[i * stride..(i + 1) * stride]);
        }
        UnivariateTable { stride, values }
    }

    #[inline]
    fn get(&self, var: usize, degree: usize) -> f64 {
        self.values[var * self.stride + degree]
    }
}

fn check(set: &MultiIndexSet, u: &[f64], families: &[Family]) -> Result<()> {
    if u.len() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: u.len(),
        });
    }
    if families.len() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: families.len(),
        });
    }
    for (&ui, fam) in u.iter().zip(families) {
        if *fam == Family::Legendre && !(-1.0..=1.0).contains(&ui) {
            return Err(Error::LegendreDomain(ui));
        }
    }
    Ok(())
}

/// Evaluate all basis functions of `set` at one standard-space point.
pub fn eval_basis_row(set: &MultiIndexSet, u: &StandardPoint, families: &[Family]) -> Result<BasisRow> {
    check(set, &u.0, families)?;
    let table = UnivariateTable::new(&u.0, families, set.max_degree());
    Ok(BasisRow(
        set.iter()
            .map(|a| a.pairs().map(|(v, d)| table.get(v, d)).product())
            .collect(),
    ))
}

/// Basis matrix `Psi[i, k] = Psi_k(u_i)` for the rows of `points` (standard
/// space, one point per row). The result is column-major so that each basis
/// column is contiguous.
pub fn basis_matrix(set: &MultiIndexSet, points: ArrayView2<f64>, families: &[Family]) -> Result<Array2<f64>> {
    let n = points.nrows();
    let p = set.len();
    for row in points.rows() {
        check(set, row.as_slice().unwrap_or(&row.to_vec()), families)?;
    }
    let max_degree = set.max_degree();
    let tables: Vec<UnivariateTable> = par::map_range(n, |i| {
        let row = points.row(i).to_vec();
        UnivariateTable::new(&row, families, max_degree)
    });
    let mut data = vec![0.0; n * p];
    par::for_each_chunk_mut(&mut data, n.max(1), |k, col| {
        if k >= p {
            return;
        }
        let a = set.get(k);
        for (i, out) in col.iter_mut().enumerate() {
            *out = a.pairs().map(|(v, d)| tables[i].get(v, d)).product();
        }
    });
    Ok(Array2::from_shape_vec((n, p).f(), data).expect("shape matches buffer"))
}
