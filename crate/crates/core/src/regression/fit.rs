//! Hybrid LAR fitting, degree-adaptive sweep and the fitted surrogate.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::lar::lar_path;
use super::qr::{correction_factor, sample_variance, IncrementalQr, Push, MAX_CONDITION};
use crate::basis::{basis_matrix, enumerate_hyperbolic, Family, MultiIndex, MultiIndexSet};
use crate::error::{Error, Result};
use crate::probability::{PhysicalPoint, RandomVector};
use crate::sampling::ExperimentalDesign;

/// Errors below this are treated as equal when comparing models, so exact
/// fits of different sizes tie and the smaller one wins.
pub const ERROR_FLOOR: f64 = 1e-20;

/// Scale in which the response is regressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseScale {
    #[default]
    Original,
    /// Natural logarithm of the (strictly positive) response.
    Log,
}

impl ResponseScale {
    pub fn forward(self, y: f64) -> Result<f64> {
        match self {
            ResponseScale::Original => Ok(y),
            ResponseScale::Log if y > 0.0 => Ok(y.ln()),
            ResponseScale::Log => Err(Error::NonPositiveResponse(y)),
        }
    }

    pub fn inverse(self, v: f64) -> f64 {
        match self {
            ResponseScale::Original => v,
            ResponseScale::Log => v.exp(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub scale: ResponseScale,
    /// Cap on the LAR path length (non-constant terms). Defaults to
    /// `min(N - 2, P - 1)` so that every prefix, constant included, stays
    /// below `N` terms.
    pub max_terms: Option<usize>,
}

/// Fitted sparse polynomial chaos expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsePce {
    input: RandomVector,
    active_set: MultiIndexSet,
    coefficients: Vec<f64>,
    scale: ResponseScale,
    degree: usize,
    q: f64,
    n_points: usize,
    candidate_size: usize,
    err_loo: f64,
    err_loo_corrected: f64,
    err_gen: Option<f64>,
    seed: u64,
    /// Path prefixes dropped for saturated leverage or ill-conditioning.
    skipped_prefixes: Vec<SkippedPrefix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPrefix {
    pub size: usize,
    pub reason: String,
}

impl SparsePce {
    /// Assemble a surrogate from explicit coefficients (aligned with `active_set`).
    pub fn from_coefficients(
        input: RandomVector,
        active_set: MultiIndexSet,
        coefficients: Vec<f64>,
        scale: ResponseScale,
    ) -> Result<Self> {
        if coefficients.len() != active_set.len() {
            return Err(Error::DimensionMismatch {
                expected: active_set.len(),
                got: coefficients.len(),
            });
        }
        if active_set.dim() != input.dim() {
            return Err(Error::DimensionMismatch {
                expected: input.dim(),
                got: active_set.dim(),
            });
        }
        let t = active_set.truncation();
        Ok(SparsePce {
            degree: t.map_or(active_set.max_degree(), |t| t.p),
            q: t.map_or(1.0, |t| t.q),
            candidate_size: active_set.len(),
            input,
            active_set,
            coefficients,
            scale,
            n_points: 0,
            err_loo: 0.0,
            err_loo_corrected: 0.0,
            err_gen: None,
            seed: 0,
            skipped_prefixes: Vec::new(),
        })
    }

    pub fn input(&self) -> &RandomVector {
        &self.input
    }

    pub fn families(&self) -> Vec<Family> {
        self.input.families()
    }

    pub fn active_set(&self) -> &MultiIndexSet {
        &self.active_set
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficient(&self, a: &MultiIndex) -> f64 {
        self.active_set.position(a).map_or(0.0, |k| self.coefficients[k])
    }

    pub fn scale(&self) -> ResponseScale {
        self.scale
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn candidate_size(&self) -> usize {
        self.candidate_size
    }

    pub fn err_loo(&self) -> f64 {
        self.err_loo
    }

    pub fn err_loo_corrected(&self) -> f64 {
        self.err_loo_corrected
    }

    pub fn err_gen(&self) -> Option<f64> {
        self.err_gen
    }

    pub fn set_err_gen(&mut self, e: f64) {
        self.err_gen = Some(e);
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn skipped_prefixes(&self) -> &[SkippedPrefix] {
        &self.skipped_prefixes
    }

    /// `|active| / |candidate|`.
    pub fn sparsity_index(&self) -> f64 {
        self.active_set.len() as f64 / self.candidate_size as f64
    }

    /// Surrogate value in the fitting scale.
    pub fn eval_transformed(&self, x: &PhysicalPoint) -> Result<f64> {
        let u = self.input.to_standard(x)?;
        let row = crate::basis::eval_basis_row(&self.active_set, &u, &self.families())?;
        Ok(row.0.iter().zip(&self.coefficients).map(|(a, c)| a * c).sum())
    }

    /// Surrogate value in the original response scale.
    pub fn predict(&self, x: &PhysicalPoint) -> Result<f64> {
        Ok(self.scale.inverse(self.eval_transformed(x)?))
    }

    /// Fitting-scale predictions for physical points given one per row.
    pub fn eval_transformed_many(&self, points: ArrayView2<f64>) -> Result<Vec<f64>> {
        let mut u = Array2::zeros(points.raw_dim());
        for (i, row) in points.rows().into_iter().enumerate() {
            let s = self.input.to_standard_slice(&row.to_vec())?;
            u.row_mut(i).assign(&ndarray::ArrayView1::from(&s));
        }
        let psi = basis_matrix(&self.active_set, u.view(), &self.families())?;
        Ok(psi.dot(&ndarray::ArrayView1::from(&self.coefficients)).to_vec())
    }

    /// Original-scale predictions for physical points given one per row.
    pub fn predict_many(&self, points: ArrayView2<f64>) -> Result<Vec<f64>> {
        Ok(self
            .eval_transformed_many(points)?
            .into_iter()
            .map(|v| self.scale.inverse(v))
            .collect())
    }
}

/// Responses of `design` mapped to the fitting scale.
fn transformed_responses(design: &ExperimentalDesign, scale: ResponseScale) -> Result<Vec<f64>> {
    design
        .responses()
        .ok_or(Error::MissingResponses)?
        .iter()
        .map(|&y| scale.forward(y))
        .collect()
}

/// Select a sparse basis inside `candidate` with LAR, refit every path prefix
/// by least squares and keep the prefix with the smallest corrected LOO error.
pub fn hybrid_fit(
    candidate: &MultiIndexSet,
    design: &ExperimentalDesign,
    rv: &RandomVector,
    options: &FitOptions,
) -> Result<SparsePce> {
    let y = transformed_responses(design, options.scale)?;
    let n = y.len();
    if n <= 2 {
        return Err(Error::TooFewPoints { min: 2, got: n });
    }
    if candidate.dim() != rv.dim() {
        return Err(Error::DimensionMismatch {
            expected: rv.dim(),
            got: candidate.dim(),
        });
    }
    let u = design.standardized(rv)?;
    let psi = basis_matrix(candidate, u.view(), &rv.families())?;
    let t = candidate.truncation();
    let mut pce = SparsePce {
        input: rv.clone(),
        active_set: candidate.subset(&[0]),
        coefficients: vec![y[0]],
        scale: options.scale,
        degree: t.map_or(candidate.max_degree(), |t| t.p),
        q: t.map_or(1.0, |t| t.q),
        n_points: n,
        candidate_size: candidate.len(),
        err_loo: 0.0,
        err_loo_corrected: 0.0,
        err_gen: None,
        seed: design.seed(),
        skipped_prefixes: Vec::new(),
    };
    let var = sample_variance(&y);
    if var == 0.0 {
        return Ok(pce);
    }

    let max_terms = options
        .max_terms
        .unwrap_or(usize::MAX)
        .min(n - 2)
        .min(candidate.len() - 1);
    let path = lar_path(psi.view(), &y, max_terms)?;

    // Prefix evaluation on an incrementally grown QR factorization.
    let mut qr = IncrementalQr::new(&y);
    let mut accepted: Vec<usize> = Vec::new();
    let mut best: Option<(f64, f64, usize)> = None;
    let columns = std::iter::once(0).chain(path.order.iter().copied());
    for col in columns {
        if qr.rank() + 1 >= n {
            break;
        }
        if qr.push(&psi.column(col).to_vec())? == Push::Dependent {
            pce.skipped_prefixes.push(SkippedPrefix {
                size: qr.rank() + 1,
                reason: "dependent column".into(),
            });
            continue;
        }
        accepted.push(col);
        let k = qr.rank();
        if qr.condition_estimate() > MAX_CONDITION {
            pce.skipped_prefixes.push(SkippedPrefix {
                size: k,
                reason: format!("condition estimate {:.3e}", qr.condition_estimate()),
            });
            continue;
        }
        let err = match qr.loo_mse() {
            Ok(mse) => mse / var,
            Err(e) => {
                pce.skipped_prefixes.push(SkippedPrefix {
                    size: k,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let corrected = err * correction_factor(n, k, qr.trace_inverse_gram())?;
        if best.is_none_or(|(b, _, _)| corrected.max(ERROR_FLOOR) < b.max(ERROR_FLOOR)) {
            best = Some((corrected, err, k));
        }
    }
    let (corrected, err, k) = best.ok_or(Error::RankDeficient)?;

    // Refit the winning prefix from scratch.
    let chosen = &accepted[..k];
    let mut qr = IncrementalQr::new(&y);
    for &col in chosen {
        qr.push(&psi.column(col).to_vec())?;
    }
    let coef = qr.coefficients();
    let mut pairs: Vec<(usize, f64)> = chosen.iter().copied().zip(coef).collect();
    pairs.sort_by_key(|p| p.0);
    let positions: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    pce.active_set = candidate.subset(&positions);
    pce.coefficients = pairs.iter().map(|p| p.1).collect();
    debug_assert_eq!(pce.active_set.len(), pce.coefficients.len());
    pce.err_loo = err;
    pce.err_loo_corrected = corrected;
    Ok(pce)
}

/// Relative generalization error of `pce` on a validation design, in the
/// original response scale.
pub fn generalization_error(pce: &SparsePce, validation: &ExperimentalDesign) -> Result<f64> {
    let y = validation.responses().ok_or(Error::MissingResponses)?;
    let var = sample_variance(y);
    if var == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let pred = pce.predict_many(validation.points().view())?;
    let mse = y.iter().zip(&pred).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64;
    Ok(mse / var)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveOptions {
    pub p_min: usize,
    pub p_max: usize,
    pub q: f64,
    /// Stop after this many consecutive degrees that do not improve the best
    /// corrected LOO error; `None` sweeps the whole range.
    pub early_stop: Option<usize>,
    pub fit: FitOptions,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            p_min: 1,
            p_max: 15,
            q: 0.5,
            early_stop: Some(3),
            fit: FitOptions::default(),
        }
    }
}

/// One row of the degree sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeRecord {
    pub p: usize,
    pub candidate_size: usize,
    pub active_size: Option<usize>,
    pub err_loo: Option<f64>,
    pub err_loo_corrected: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub q: f64,
    pub rows: Vec<DegreeRecord>,
    pub selected_p: usize,
    pub stopped_early: bool,
}

/// Run [`hybrid_fit`] for each degree in `p_min..=p_max` and keep the one
/// with the smallest corrected LOO error (smallest degree on ties).
pub fn adaptive_fit(
    design: &ExperimentalDesign,
    rv: &RandomVector,
    options: &AdaptiveOptions,
) -> Result<(SparsePce, FitDiagnostics)> {
    if options.p_max < 1 || options.p_min > options.p_max {
        return Err(Error::InvalidArgument(format!(
            "invalid degree range {}..={}",
            options.p_min, options.p_max
        )));
    }
    let mut rows = Vec::new();
    let mut best: Option<SparsePce> = None;
    let mut stale = 0;
    let mut stopped_early = false;
    for p in options.p_min.max(1)..=options.p_max {
        let candidate = enumerate_hyperbolic(rv.dim(), p, options.q)?;
        let size = candidate.len();
        match hybrid_fit(&candidate, design, rv, &options.fit) {
            Ok(pce) => {
                rows.push(DegreeRecord {
                    p,
                    candidate_size: size,
                    active_size: Some(pce.active_set.len()),
                    err_loo: Some(pce.err_loo),
                    err_loo_corrected: Some(pce.err_loo_corrected),
                    failure: None,
                });
                let better = best.as_ref().is_none_or(|b| {
                    pce.err_loo_corrected.max(ERROR_FLOOR) < b.err_loo_corrected.max(ERROR_FLOOR)
                });
                if better {
                    best = Some(pce);
                    stale = 0;
                } else {
                    stale += 1;
                }
            }
            Err(e @ (Error::MissingResponses | Error::NonPositiveResponse(_) | Error::OutOfSupport { .. })) => {
                return Err(e)
            }
            Err(e) => {
                rows.push(DegreeRecord {
                    p,
                    candidate_size: size,
                    active_size: None,
                    err_loo: None,
                    err_loo_corrected: None,
                    failure: Some(e.to_string()),
                });
                stale += 1;
            }
        }
        if options.early_stop.is_some_and(|k| stale >= k) && best.is_some() {
            stopped_early = p < options.p_max;
            break;
        }
    }
    match best {
        Some(pce) => {
            let diag = FitDiagnostics {
                q: options.q,
                rows,
                selected_p: pce.degree,
                stopped_early,
            };
            Ok((pce, diag))
        }
        None => Err(Error::AllDegreesFailed(
            rows.iter()
                .filter_map(|r| r.failure.as_ref().map(|f| format!("p={}: {f}", r.p)))
                .collect::<Vec<_>>()
                .join("; "),
        )),
    }
}
