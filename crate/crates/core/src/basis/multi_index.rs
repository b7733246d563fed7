//! Multi-indices and hyperbolic (q-norm) truncation sets.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tensor-degree tuple stored sparsely as `(variable, degree)` pairs with
/// strictly increasing variable indices and nonzero degrees.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<(u32, u32)>);

impl MultiIndex {
    pub fn zero() -> Self {
        MultiIndex(Vec::new())
    }

    /// Build from `(variable, degree)` pairs in any order; zero degrees are dropped.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut v: Vec<(u32, u32)> = pairs
            .into_iter()
            .filter(|&(_, d)| d > 0)
            .map(|(i, d)| (i as u32, d as u32))
            .collect();
        v.sort_unstable();
        v.dedup_by_key(|p| p.0);
        MultiIndex(v)
    }

    pub fn from_dense(degrees: &[usize]) -> Self {
        Self::from_pairs(degrees.iter().copied().enumerate())
    }

    pub fn to_dense(&self, dim: usize) -> Vec<usize> {
        let mut d = vec![0; dim];
        for &(i, a) in &self.0 {
            d[i as usize] = a as usize;
        }
        d
    }

    /// Nonzero `(variable, degree)` pairs in increasing variable order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().map(|&(i, d)| (i as usize, d as usize))
    }

    pub fn degree_of(&self, var: usize) -> usize {
        self.0
            .binary_search_by_key(&(var as u32), |p| p.0)
            .map(|k| self.0[k].1 as usize)
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of variables with a nonzero degree.
    pub fn interaction_order(&self) -> usize {
        self.0.len()
    }

    pub fn total_degree(&self) -> usize {
        self.0.iter().map(|p| p.1 as usize).sum()
    }

    pub fn max_degree(&self) -> usize {
        self.0.iter().map(|p| p.1 as usize).max().unwrap_or(0)
    }

    /// `(sum alpha_i^q)^(1/q)`.
    pub fn q_norm(&self, q: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        self.0
            .iter()
            .map(|&(_, d)| (d as f64).powf(q))
            .sum::<f64>()
            .powf(1.0 / q)
    }

    /// Variables carrying a nonzero degree.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|p| p.0 as usize)
    }

    fn graded_cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| lex_desc(&self.0, &other.0))
    }
}

/// Descending lexicographic comparison of the dense tuples: at the first
/// variable where the degrees differ, the larger degree sorts first.
fn lex_desc(a: &[(u32, u32)], b: &[(u32, u32)]) -> Ordering {
    let (mut i, mut j) = (0, 0);
    loop {
        match (a.get(i), b.get(j)) {
            (None, None) => return Ordering::Equal,
            (Some(_), None) => return Ordering::Less,
            (None, Some(_)) => return Ordering::Greater,
            (Some(&(va, da)), Some(&(vb, db))) => match va.cmp(&vb) {
                Ordering::Less => return Ordering::Less,
                Ordering::Greater => return Ordering::Greater,
                Ordering::Equal => match db.cmp(&da) {
                    Ordering::Equal => {
                        i += 1;
                        j += 1;
                    }
                    o => return o,
                },
            },
        }
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        for (k, (i, d)) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{i}:{d}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    /// Maximum q-norm `p`.
    pub p: usize,
    /// Norm parameter, `0 < q <= 1`.
    pub q: f64,
}

/// Ordered, duplicate-free set of multi-indices that always contains the zero index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiIndexSet {
    dim: usize,
    truncation: Option<Truncation>,
    indices: Vec<MultiIndex>,
}

impl MultiIndexSet {
    /// Build a set from arbitrary indices: the zero index is added if missing,
    /// duplicates are removed and the graded-lexicographic order is restored.
    pub fn from_indices(dim: usize, indices: Vec<MultiIndex>) -> Result<Self> {
        for a in &indices {
            if let Some((v, _)) = a.pairs().last() {
                if v >= dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: v + 1,
                    });
                }
            }
        }
        let mut indices = indices;
        indices.push(MultiIndex::zero());
        indices.sort_by(|a, b| a.graded_cmp(b));
        indices.dedup();
        Ok(MultiIndexSet {
            dim,
            truncation: None,
            indices,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn truncation(&self) -> Option<Truncation> {
        self.truncation
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn get(&self, k: usize) -> &MultiIndex {
        &self.indices[k]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MultiIndex> {
        self.indices.iter()
    }

    pub fn contains(&self, a: &MultiIndex) -> bool {
        self.indices
            .binary_search_by(|probe| probe.graded_cmp(a))
            .is_ok()
    }

    /// Position of `a` in the set, if present.
    pub fn position(&self, a: &MultiIndex) -> Option<usize> {
        self.indices.binary_search_by(|probe| probe.graded_cmp(a)).ok()
    }

    /// Largest univariate degree over all members.
    pub fn max_degree(&self) -> usize {
        self.indices.iter().map(|a| a.max_degree()).max().unwrap_or(0)
    }

    /// Subset containing the members at `positions` (in set order).
    pub fn subset(&self, positions: &[usize]) -> MultiIndexSet {
        let mut pos = positions.to_vec();
        pos.sort_unstable();
        pos.dedup();
        let mut indices: Vec<MultiIndex> = pos.iter().map(|&k| self.indices[k].clone()).collect();
        if !indices.first().is_some_and(|a| a.is_zero()) {
            indices.insert(0, MultiIndex::zero());
        }
        MultiIndexSet {
            dim: self.dim,
            truncation: self.truncation,
            indices,
        }
    }
}

impl<'a> IntoIterator for &'a MultiIndexSet {
    type Item = &'a MultiIndex;
    type IntoIter = std::slice::Iter<'a, MultiIndex>;

    fn into_iter(self) -> Self::IntoIter {
        self.indices.iter()
    }
}

/// All multi-indices of dimension `dim` with `||alpha||_q <= p`.
///
/// The set is built by depth-first descent over variables, pruning any branch
/// whose partial sum of `alpha_i^q` already exceeds `p^q`, so only members of
/// the truncated set are ever materialized.
pub fn enumerate_hyperbolic(dim: usize, p: usize, q: f64) -> Result<MultiIndexSet> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidNorm(q));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    let budget = (p as f64).powf(q);
    let tol = 1e-10 * budget.max(1.0);
    let powers: Vec<f64> = (0..=p).map(|d| (d as f64).powf(q)).collect();

    let mut out = Vec::new();
    let mut current: Vec<(u32, u32)> = Vec::new();
    descend(dim, 0, 0.0, budget + tol, &powers, &mut current, &mut out);
    out.sort_by(|a, b| a.graded_cmp(b));
    Ok(MultiIndexSet {
        dim,
        truncation: Some(Truncation { p, q }),
        indices: out,
    })
}

fn descend(
    dim: usize,
    start: usize,
    used: f64,
    limit: f64,
    powers: &[f64],
    current: &mut Vec<(u32, u32)>,
    out: &mut Vec<MultiIndex>,
) {
    out.push(MultiIndex(current.clone()));
    for var in start..dim {
        for (d, &pw) in powers.iter().enumerate().skip(1) {
            if used + pw > limit {
                break;
            }
            current.push((var as u32, d as u32));
            descend(dim, var + 1, used + pw, limit, powers, current, out);
            current.pop();
        }
    }
}

/// Size of the full total-degree basis, `binom(dim + p, p)`, in exact arithmetic.
pub fn count_total_degree(dim: usize, p: usize) -> BigUint {
    let mut acc = BigUint::from(1u32);
    for k in 1..=p {
        acc *= BigUint::from(dim + k);
        acc /= BigUint::from(k);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_total_degree_set() {
        let s = enumerate_hyperbolic(2, 2, 1.0).unwrap();
        let dense: Vec<Vec<usize>> = s.iter().map(|a| a.to_dense(2)).collect();
        assert_eq!(
            dense,
            vec![
                vec![0, 0],
                vec![1, 0],
                vec![0, 1],
                vec![2, 0],
                vec![1, 1],
                vec![0, 2]
            ]
        );
    }

    #[test]
    fn invalid_q_rejected() {
        assert!(matches!(
            enumerate_hyperbolic(3, 2, 0.0),
            Err(Error::InvalidNorm(_))
        ));
        assert!(matches!(
            enumerate_hyperbolic(3, 2, 1.5),
            Err(Error::InvalidNorm(_))
        ));
    }

    #[test]
    fn total_degree_counts() {
        assert_eq!(count_total_degree(2, 2), BigUint::from(6u32));
        assert_eq!(count_total_degree(17, 0), BigUint::from(1u32));
        assert_eq!(
            count_total_degree(78, 8),
            BigUint::from(53_060_358_690u64)
        );
    }

    #[test]
    fn q_one_matches_binomial_exhaustively() {
        for m in 1..=6 {
            for p in 0..=6 {
                let s = enumerate_hyperbolic(m, p, 1.0).unwrap();
                assert_eq!(
                    BigUint::from(s.len()),
                    count_total_degree(m, p),
                    "M={m} p={p}"
                );
            }
        }
    }

    #[test]
    fn zero_degree_set_is_just_the_constant() {
        let s = enumerate_hyperbolic(5, 0, 0.5).unwrap();
        assert_eq!(s.len(), 1);
        assert!(s.get(0).is_zero());
    }

    #[test]
    fn lookup_and_display() {
        let s = enumerate_hyperbolic(4, 3, 0.75).unwrap();
        for (k, a) in s.iter().enumerate() {
            assert_eq!(s.position(a), Some(k));
        }
        let a = MultiIndex::from_dense(&[0, 2, 0, 1]);
        assert_eq!(a.to_string(), "1:2 3:1");
        assert_eq!(MultiIndex::zero().to_string(), "0");
        assert_eq!(a.degree_of(1), 2);
        assert_eq!(a.degree_of(2), 0);
    }

    #[test]
    fn from_indices_normalizes() {
        let s = MultiIndexSet::from_indices(
            3,
            vec![
                MultiIndex::from_dense(&[0, 0, 2]),
                MultiIndex::from_dense(&[1, 0, 0]),
                MultiIndex::from_dense(&[1, 0, 0]),
            ],
        )
        .unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.get(0).is_zero());
        assert!(MultiIndexSet::from_indices(2, vec![MultiIndex::from_dense(&[0, 0, 1])]).is_err());
    }

    fn brute_force(dim: usize, p: usize, q: f64) -> usize {
        let mut count = 0;
        let mut alpha = vec![0usize; dim];
        loop {
            let a = MultiIndex::from_dense(&alpha);
            if a.q_norm(q) <= p as f64 + 1e-9 {
                count += 1;
            }
            let mut k = 0;
            loop {
                if k == dim {
                    return count;
                }
                alpha[k] += 1;
                if alpha[k] <= p {
                    break;
                }
                alpha[k] = 0;
                k += 1;
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn matches_hypercube_filter(dim in 1usize..5, p in 0usize..6, q in 0.2f64..=1.0) {
            let s = enumerate_hyperbolic(dim, p, q).unwrap();
            prop_assert_eq!(s.len(), brute_force(dim, p, q));
            for a in &s {
                prop_assert!(a.q_norm(q) <= p as f64 * (1.0 + 1e-9) + 1e-12);
            }
        }

        #[test]
        fn truncation_is_monotone(dim in 1usize..6, p in 0usize..6, q1 in 0.2f64..=1.0, dq in 0.0f64..0.8) {
            let q2 = (q1 + dq).min(1.0);
            let small = enumerate_hyperbolic(dim, p, q1).unwrap();
            let big = enumerate_hyperbolic(dim, p, q2).unwrap();
            for a in &small {
                prop_assert!(big.contains(a));
            }
            let bigger_p = enumerate_hyperbolic(dim, p + 1, q1).unwrap();
            for a in &small {
                prop_assert!(bigger_p.contains(a));
            }
        }
    }
}
