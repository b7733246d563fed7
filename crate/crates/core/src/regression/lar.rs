//! Least Angle Regression used as a predictor-selection device.
//!
//! Columns are centered and scaled to unit norm on the fly (the standardized
//! matrix is never materialized), constant columns are left out, and the
//! response is centered and scaled to unit norm so the stopping tolerance is
//! scale free.

use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::par;

/// Correlations below this value end the path.
pub const CORRELATION_TOL: f64 = 1e-12;

/// Inclusion order produced by LAR.
#[derive(Debug, Clone, PartialEq)]
pub struct LarPath {
    /// Column indices in the order they entered the active set.
    pub order: Vec<usize>,
    /// Columns that were skipped because they were collinear with the active set.
    pub collinear: Vec<usize>,
    /// True when the path ended before `max_terms` (zero correlations or exhausted columns).
    pub truncated: bool,
}

impl LarPath {
    /// Nested active sets `A_1 ⊂ A_2 ⊂ ...`.
    pub fn active_sets(&self) -> Vec<Vec<usize>> {
        (1..=self.order.len()).map(|k| self.order[..k].to_vec()).collect()
    }
}

struct Standardized<'a> {
    x: ArrayView2<'a, f64>,
    mean: Vec<f64>,
    inv_norm: Vec<f64>,
    eligible: Vec<bool>,
}

impl<'a> Standardized<'a> {
    fn new(x: ArrayView2<'a, f64>) -> Self {
        let n = x.nrows();
        let stats: Vec<(f64, f64)> = par::map_range(x.ncols(), |j| {
            let col = x.column(j);
            let mean = col.sum() / n as f64;
            let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
            let scale: f64 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            (mean, if ss.sqrt() > 1e-10 * scale.max(f64::MIN_POSITIVE) { ss.sqrt() } else { 0.0 })
        });
        let mean = stats.iter().map(|s| s.0).collect();
        let eligible = stats.iter().map(|s| s.1 > 0.0).collect();
        let inv_norm = stats.iter().map(|s| if s.1 > 0.0 { 1.0 / s.1 } else { 0.0 }).collect();
        Standardized {
            x,
            mean,
            inv_norm,
            eligible,
        }
    }

    /// `x_j_std . v` where `sum_v = sum(v)`.
    #[inline]
    fn dot(&self, j: usize, v: &[f64], sum_v: f64) -> f64 {
        let col = self.x.column(j);
        let raw: f64 = match col.as_slice() {
            Some(s) => s.iter().zip(v).map(|(a, b)| a * b).sum(),
            None => col.iter().zip(v).map(|(a, b)| a * b).sum(),
        };
        (raw - self.mean[j] * sum_v) * self.inv_norm[j]
    }

    fn column(&self, j: usize) -> Vec<f64> {
        self.x
            .column(j)
            .iter()
            .map(|v| (v - self.mean[j]) * self.inv_norm[j])
            .collect()
    }
}

/// Run LAR on `psi` (N x P) against `y`, returning the inclusion order of at
/// most `max_terms` columns. Constant columns never enter; the path stops
/// early once every residual correlation falls below [`CORRELATION_TOL`].
pub fn lar_path(psi: ArrayView2<f64>, y: &[f64], max_terms: usize) -> Result<LarPath> {
    let n = psi.nrows();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if n < 2 {
        return Err(Error::TooFewPoints { min: 1, got: n });
    }
    let std = Standardized::new(psi);
    let p = psi.ncols();
    let limit = max_terms.min(n - 1).min(std.eligible.iter().filter(|&&e| e).count());

    let y_mean = y.iter().sum::<f64>() / n as f64;
    let mut r: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let y_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut path = LarPath {
        order: Vec::new(),
        collinear: Vec::new(),
        truncated: false,
    };
    if y_norm == 0.0 || limit == 0 {
        path.truncated = limit > 0;
        return Ok(path);
    }
    r.iter_mut().for_each(|v| *v /= y_norm);

    // Residual correlations; centered residual so sum(r) = 0.
    let mut c: Vec<f64> = par::map_range(p, |j| if std.eligible[j] { std.dot(j, &r, 0.0) } else { 0.0 });
    let mut in_play = std.eligible.clone();
    let mut active: Vec<usize> = Vec::new();
    let mut active_cols: Vec<Vec<f64>> = Vec::new();
    // Lower Cholesky factor of the active Gram matrix, row by row.
    let mut chol: Vec<Vec<f64>> = Vec::new();
    let mut next: Option<usize> = None;

    while active.len() < limit {
        let j = match next.take() {
            Some(j) => j,
            None => match argmax_abs(&c, &in_play) {
                Some(j) => j,
                None => {
                    path.truncated = true;
                    break;
                }
            },
        };
        let big_c = c[j].abs();
        if big_c < CORRELATION_TOL {
            path.truncated = true;
            break;
        }
        let xj = std.column(j);
        let g_row: Vec<f64> = active_cols
            .iter()
            .map(|a| a.iter().zip(&xj).map(|(u, v)| u * v).sum())
            .collect();
        in_play[j] = false;
        match cholesky_append(&chol, &g_row, 1.0) {
            Some(row) => chol.push(row),
            None => {
                path.collinear.push(j);
                continue;
            }
        }
        active.push(j);
        active_cols.push(xj);
        path.order.push(j);

        let signs: Vec<f64> = active.iter().map(|&k| c[k].signum()).collect();
        let w0 = cholesky_solve(&chol, &signs);
        let norm_sq: f64 = signs.iter().zip(&w0).map(|(s, w)| s * w).sum();
        if norm_sq <= 0.0 {
            path.truncated = true;
            break;
        }
        let aa = 1.0 / norm_sq.sqrt();
        let w: Vec<f64> = w0.iter().map(|v| v * aa).collect();
        let mut u = vec![0.0; n];
        for (col, &wk) in active_cols.iter().zip(&w) {
            for (ui, ci) in u.iter_mut().zip(col) {
                *ui += wk * ci;
            }
        }
        let a: Vec<f64> = par::map_range(p, |k| if in_play[k] { std.dot(k, &u, 0.0) } else { 0.0 });

        let mut gamma = big_c / aa;
        let mut arg = None;
        for k in 0..p {
            if !in_play[k] {
                continue;
            }
            for cand in [(big_c - c[k]) / (aa - a[k]), (big_c + c[k]) / (aa + a[k])] {
                if cand > 1e-15 && cand < gamma {
                    gamma = cand;
                    arg = Some(k);
                }
            }
        }
        for (ri, ui) in r.iter_mut().zip(&u) {
            *ri -= gamma * ui;
        }
        for k in 0..p {
            c[k] -= gamma * a[k];
        }
        next = arg;
        if arg.is_none() {
            // Full least-squares step: the residual is orthogonal to the active set.
            if active.len() < limit {
                let rest = argmax_abs(&c, &in_play);
                if rest.is_none_or(|k| c[k].abs() < CORRELATION_TOL) {
                    path.truncated = true;
                    break;
                }
            }
        }
    }
    Ok(path)
}

fn argmax_abs(c: &[f64], in_play: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, (&v, &ok)) in c.iter().zip(in_play).enumerate() {
        if ok && best.is_none_or(|(_, b)| v.abs() > b) {
            best = Some((k, v.abs()));
        }
    }
    best.map(|b| b.0)
}

/// New row of the Cholesky factor after appending a column with Gram entries
/// `g_row` (against existing columns) and squared norm `diag`. `None` when the
/// column is numerically dependent.
fn cholesky_append(chol: &[Vec<f64>], g_row: &[f64], diag: f64) -> Option<Vec<f64>> {
    let k = chol.len();
    let mut row = vec![0.0; k + 1];
    for i in 0..k {
        let s: f64 = (0..i).map(|t| row[t] * chol[i][t]).sum();
        row[i] = (g_row[i] - s) / chol[i][i];
    }
    let d = diag - row[..k].iter().map(|v| v * v).sum::<f64>();
    if d <= 1e-10 * diag {
        return None;
    }
    row[k] = d.sqrt();
    Some(row)
}

fn cholesky_solve(chol: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let k = chol.len();
    let mut z = vec![0.0; k];
    for i in 0..k {
        let s: f64 = (0..i).map(|t| chol[i][t] * z[t]).sum();
        z[i] = (b[i] - s) / chol[i][i];
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|t| chol[t][i] * x[t]).sum();
        x[i] = (z[i] - s) / chol[i][i];
    }
    x
}
