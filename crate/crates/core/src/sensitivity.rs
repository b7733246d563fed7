//! Moments and Sobol' indices read directly off the coefficients of a sparse
//! PCE, plus screening, grouping, univariate effects and a subsampling study
//! of index robustness.
//!
//! All quantities refer to the response in the scale the expansion was
//! fitted in (see [`ResponseScale`]).

use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::Family;
use crate::error::{Error, Result};
use crate::par;
use crate::regression::{adaptive_fit, AdaptiveOptions, ResponseScale, SparsePce};
use crate::sampling::{format_float, ExperimentalDesign};

/// Default screening threshold on total indices.
pub const DEFAULT_THRESHOLD: f64 = 0.01;

/// Mean and standard deviation of the expansion.
pub fn moments(pce: &SparsePce) -> (f64, f64) {
    (mean(pce), total_variance(pce).sqrt())
}

fn mean(pce: &SparsePce) -> f64 {
    pce.active_set()
        .iter()
        .zip(pce.coefficients())
        .find(|(a, _)| a.is_zero())
        .map_or(0.0, |(_, c)| *c)
}

/// `D = sum_{alpha != 0} y_alpha^2`.
pub fn total_variance(pce: &SparsePce) -> f64 {
    pce.active_set()
        .iter()
        .zip(pce.coefficients())
        .filter(|(a, _)| !a.is_zero())
        .map(|(_, c)| c * c)
        .sum()
}

/// Sum of `y_alpha^2 / D` over the members accepted by `keep`; zero when `D = 0`.
fn share(pce: &SparsePce, keep: impl Fn(&crate::basis::MultiIndex) -> bool) -> f64 {
    let d = total_variance(pce);
    if d == 0.0 {
        return 0.0;
    }
    let part: f64 = pce
        .active_set()
        .iter()
        .zip(pce.coefficients())
        .filter(|(a, _)| !a.is_zero() && keep(a))
        .map(|(_, c)| c * c)
        .sum();
    part / d
}

pub fn sobol_first(pce: &SparsePce) -> Vec<f64> {
    let dim = pce.active_set().dim();
    let mut out = vec![0.0; dim];
    let d = total_variance(pce);
    if d == 0.0 {
        return out;
    }
    for (a, c) in pce.active_set().iter().zip(pce.coefficients()) {
        if a.interaction_order() == 1 {
            out[a.support().next().expect("non-empty support")] += c * c;
        }
    }
    out.iter_mut().for_each(|v| *v /= d);
    out
}

/// Second-order index of one pair of variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairIndex {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Nonzero second-order indices, sorted by `(i, j)` with `i < j`.
pub fn sobol_second(pce: &SparsePce) -> Vec<PairIndex> {
    let d = total_variance(pce);
    let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    if d == 0.0 {
        return Vec::new();
    }
    for (a, c) in pce.active_set().iter().zip(pce.coefficients()) {
        if a.interaction_order() == 2 {
            let mut s = a.support();
            let i = s.next().expect("two variables");
            let j = s.next().expect("two variables");
            *map.entry((i, j)).or_insert(0.0) += c * c;
        }
    }
    map.into_iter()
        .map(|((i, j), v)| PairIndex { i, j, value: v / d })
        .collect()
}

pub fn sobol_total(pce: &SparsePce) -> Vec<f64> {
    let dim = pce.active_set().dim();
    let mut out = vec![0.0; dim];
    let d = total_variance(pce);
    if d == 0.0 {
        return out;
    }
    for (a, c) in pce.active_set().iter().zip(pce.coefficients()) {
        for v in a.support() {
            out[v] += c * c;
        }
    }
    out.iter_mut().for_each(|v| *v /= d);
    out
}

/// Index of the subset `u`: the share of variance carried by terms that depend
/// on exactly the variables of `u`.
pub fn sobol_group(pce: &SparsePce, u: &[usize]) -> f64 {
    let mut u = u.to_vec();
    u.sort_unstable();
    u.dedup();
    share(pce, |a| a.support().eq(u.iter().copied()))
}

/// Closed index of `u`: variance of terms whose variables all lie in `u`.
pub fn sobol_closed(pce: &SparsePce, u: &[usize]) -> f64 {
    share(pce, |a| a.support().all(|v| u.contains(&v)))
}

/// Every nonzero subset index, keyed by the sorted variable subset.
pub fn all_group_indices(pce: &SparsePce) -> BTreeMap<Vec<usize>, f64> {
    let d = total_variance(pce);
    let mut out = BTreeMap::new();
    if d == 0.0 {
        return out;
    }
    for (a, c) in pce.active_set().iter().zip(pce.coefficients()) {
        if !a.is_zero() {
            *out.entry(a.support().collect()).or_insert(0.0) += c * c / d;
        }
    }
    out
}

/// Full set of PCE-based sensitivity measures for one surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolReport {
    pub names: Vec<String>,
    pub scale: ResponseScale,
    pub mean: f64,
    pub total_variance: f64,
    pub first_order: Vec<f64>,
    pub total: Vec<f64>,
    pub second_order: Vec<PairIndex>,
    pub threshold: f64,
    /// `important[i]` is true when `total[i] >= threshold`.
    pub important: Vec<bool>,
}

impl SobolReport {
    pub fn new(pce: &SparsePce, threshold: f64) -> Self {
        let total = sobol_total(pce);
        SobolReport {
            names: pce.input().names().into_iter().map(String::from).collect(),
            scale: pce.scale(),
            mean: mean(pce),
            total_variance: total_variance(pce),
            first_order: sobol_first(pce),
            important: total.iter().map(|&t| t >= threshold).collect(),
            total,
            second_order: sobol_second(pce),
            threshold,
        }
    }

    /// Variable indices ordered by decreasing total index (stable on ties).
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.total.len()).collect();
        idx.sort_by(|&a, &b| self.total[b].total_cmp(&self.total[a]));
        idx
    }

    /// Indices of the `k` variables with the largest total indices.
    pub fn top(&self, k: usize) -> Vec<usize> {
        self.ranking().into_iter().take(k).collect()
    }

    pub fn write_indices_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["variable", "first_order", "total", "important"])?;
        for i in 0..self.names.len() {
            w.write_record([
                self.names[i].clone(),
                format_float(self.first_order[i]),
                format_float(self.total[i]),
                self.important[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_second_order_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["variable_i", "variable_j", "second_order"])?;
        for p in &self.second_order {
            w.write_record([self.names[p.i].clone(), self.names[p.j].clone(), format_float(p.value)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Split variables by the screening rule `S_i^T < threshold`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Screening {
    pub important: Vec<usize>,
    pub unimportant: Vec<usize>,
}

pub fn screen(report: &SobolReport, threshold: f64) -> Screening {
    let (important, unimportant) = (0..report.total.len()).partition(|&i| report.total[i] >= threshold);
    Screening { important, unimportant }
}

/// Sum of first-order indices per label, in order of first appearance.
pub fn grouped_sums(report: &SobolReport, labels: &[String]) -> Result<Vec<(String, f64)>> {
    if labels.len() != report.first_order.len() {
        return Err(Error::DimensionMismatch {
            expected: report.first_order.len(),
            got: labels.len(),
        });
    }
    let mut out: Vec<(String, f64)> = Vec::new();
    for (label, s) in labels.iter().zip(&report.first_order) {
        match out.iter_mut().find(|(l, _)| l == label) {
            Some(entry) => entry.1 += s,
            None => out.push((label.clone(), *s)),
        }
    }
    Ok(out)
}

/// Conditional expectation `E[M(X) | X_i = x_i] - E[M(X)]` of the expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnivariateEffect {
    pub variable: usize,
    pub family: Family,
    /// `(degree, coefficient)` pairs of the univariate polynomial in the standard variable.
    pub coefficients: Vec<(usize, f64)>,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl UnivariateEffect {
    /// Evaluate the effect at a standard-space coordinate.
    pub fn eval_standard(&self, u: f64) -> Result<f64> {
        let max = self.coefficients.iter().map(|c| c.0).max().unwrap_or(0);
        let mut vals = vec![0.0; max + 1];
        self.family.eval_all(u, &mut vals)?;
        Ok(self.coefficients.iter().map(|&(d, c)| c * vals[d]).sum())
    }
}

/// Univariate effect of variable `i` evaluated on a grid of physical values.
pub fn univariate_effect(pce: &SparsePce, i: usize, grid: &[f64]) -> Result<UnivariateEffect> {
    let rv = pce.input();
    if i >= rv.dim() {
        return Err(Error::DimensionMismatch {
            expected: rv.dim(),
            got: i + 1,
        });
    }
    let coefficients: Vec<(usize, f64)> = pce
        .active_set()
        .iter()
        .zip(pce.coefficients())
        .filter(|(a, _)| a.interaction_order() == 1 && a.degree_of(i) > 0)
        .map(|(a, &c)| (a.degree_of(i), c))
        .collect();
    let mut effect = UnivariateEffect {
        variable: i,
        family: rv.marginal(i).family(),
        coefficients,
        grid: grid.to_vec(),
        values: Vec::with_capacity(grid.len()),
    };
    for &x in grid {
        let u = rv.standardize_coordinate(i, x)?;
        effect.values.push(effect.eval_standard(u)?);
    }
    Ok(effect)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyOptions {
    pub subset_size: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub fit: AdaptiveOptions,
}

/// Five-number summary of one variable's index over the repetitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

impl BoxStats {
    /// Summary with linearly interpolated quantiles.
    pub fn from_values(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        BoxStats {
            min: v[0],
            q25: q(0.25),
            median: q(0.5),
            q75: q(0.75),
            max: v[v.len() - 1],
        }
    }

    pub fn iqr(&self) -> f64 {
        self.q75 - self.q25
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleStudy {
    pub names: Vec<String>,
    /// `totals[r][i]`: total index of variable `i` in repetition `r`.
    pub totals: Vec<Vec<f64>>,
    pub stats: Vec<BoxStats>,
}

impl SubsampleStudy {
    pub fn write_stats_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["variable", "min", "q25", "median", "q75", "max"])?;
        for (name, s) in self.names.iter().zip(&self.stats) {
            w.write_record([
                name.clone(),
                format_float(s.min),
                format_float(s.q25),
                format_float(s.median),
                format_float(s.q75),
                format_float(s.max),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Refit the surrogate on random subsets of the design and collect the
/// spread of total indices. Repetition `r` draws its subset from the ChaCha
/// stream `r` of `seed`, so results do not depend on scheduling.
pub fn repeated_subsample_study(
    design: &ExperimentalDesign,
    rv: &crate::probability::RandomVector,
    options: &StudyOptions,
) -> Result<SubsampleStudy> {
    if options.repetitions == 0 {
        return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
    }
    if options.subset_size > design.len() {
        return Err(Error::InvalidArgument(format!(
            "subset size {} exceeds design size {}",
            options.subset_size,
            design.len()
        )));
    }
    let runs = par::map_range(options.repetitions, |r| -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        rng.set_stream(r as u64);
        let mut rows = rand::seq::index::sample(&mut rng, design.len(), options.subset_size).into_vec();
        rows.sort_unstable();
        let sub = design.subset(&rows);
        let (pce, _) = adaptive_fit(&sub, rv, &options.fit)?;
        Ok(sobol_total(&pce))
    });
    let totals = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let stats = (0..rv.dim())
        .map(|i| BoxStats::from_values(&totals.iter().map(|t| t[i]).collect::<Vec<_>>()))
        .collect();
    Ok(SubsampleStudy {
        names: rv.names().into_iter().map(String::from).collect(),
        totals,
        stats,
    })
}
