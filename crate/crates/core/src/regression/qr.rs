//! Incremental least squares by modified Gram-Schmidt with reorthogonalization,
//! tracking residuals, leverages and `R^{-1}` as columns are appended, plus the
//! leave-one-out error estimators built on top of them.

use ndarray::ArrayView2;

use crate::error::{Error, Result};

/// Leverages at or above `1 - LEVERAGE_GUARD` make the LOO formula unusable.
pub const LEVERAGE_GUARD: f64 = 1e-10;
/// Relative residual norm under which an appended column counts as dependent.
pub const DEPENDENCE_TOL: f64 = 1e-10;
/// Condition-number estimate beyond which a fit is rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Outcome of [`IncrementalQr::push`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Push {
    Added,
    /// Column is numerically in the span of the existing ones; nothing changed.
    Dependent,
}

/// Thin QR factorization `Psi_A = Q R` grown one column at a time.
#[derive(Debug, Clone)]
pub struct IncrementalQr {
    n: usize,
    y: Vec<f64>,
    q: Vec<Vec<f64>>,
    /// Column `j` of `R` holds entries `0..=j`.
    r: Vec<Vec<f64>>,
    /// Column `j` of `R^{-1}` holds entries `0..=j`.
    rinv: Vec<Vec<f64>>,
    qty: Vec<f64>,
    residual: Vec<f64>,
    leverage: Vec<f64>,
    r_fro2: f64,
    rinv_fro2: f64,
}

impl IncrementalQr {
    pub fn new(y: &[f64]) -> Self {
        IncrementalQr {
            n: y.len(),
            y: y.to_vec(),
            q: Vec::new(),
            r: Vec::new(),
            rinv: Vec::new(),
            qty: Vec::new(),
            residual: y.to_vec(),
            leverage: vec![0.0; y.len()],
            r_fro2: 0.0,
            rinv_fro2: 0.0,
        }
    }

    pub fn rank(&self) -> usize {
        self.q.len()
    }

    pub fn push(&mut self, col: &[f64]) -> Result<Push> {
        if col.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: col.len(),
            });
        }
        let k = self.q.len();
        let norm0 = dot(col, col).sqrt();
        if norm0 == 0.0 {
            return Ok(Push::Dependent);
        }
        let mut v = col.to_vec();
        let mut rcol = vec![0.0; k + 1];
        for _ in 0..2 {
            for (j, qj) in self.q.iter().enumerate() {
                let s = dot(qj, &v);
                axpy(-s, qj, &mut v);
                rcol[j] += s;
            }
        }
        let rho = dot(&v, &v).sqrt();
        if rho <= DEPENDENCE_TOL * norm0 {
            return Ok(Push::Dependent);
        }
        v.iter_mut().for_each(|x| *x /= rho);
        rcol[k] = rho;

        // New column of R^{-1}: [-R_k^{-1} r / rho ; 1 / rho].
        let mut inv = vec![0.0; k + 1];
        for i in 0..k {
            let s: f64 = (i..k).map(|j| self.rinv[j][i] * rcol[j]).sum();
            inv[i] = -s / rho;
        }
        inv[k] = 1.0 / rho;

        let qty = dot(&v, &self.y);
        axpy(-qty, &v, &mut self.residual);
        for (h, qi) in self.leverage.iter_mut().zip(&v) {
            *h += qi * qi;
        }
        self.r_fro2 += dot(&rcol, &rcol);
        self.rinv_fro2 += dot(&inv, &inv);
        self.q.push(v);
        self.r.push(rcol);
        self.rinv.push(inv);
        self.qty.push(qty);
        Ok(Push::Added)
    }

    /// Least-squares coefficients for the columns pushed so far.
    pub fn coefficients(&self) -> Vec<f64> {
        let k = self.q.len();
        (0..k)
            .map(|i| (i..k).map(|j| self.rinv[j][i] * self.qty[j]).sum())
            .collect()
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residual
    }

    /// Diagonal of the hat matrix.
    pub fn leverages(&self) -> &[f64] {
        &self.leverage
    }

    /// `||R^{-1}||_F^2 = tr((Psi^T Psi)^{-1})`.
    pub fn trace_inverse_gram(&self) -> f64 {
        self.rinv_fro2
    }

    /// Frobenius-norm upper bound on the 2-norm condition number of `Psi_A`.
    pub fn condition_estimate(&self) -> f64 {
        (self.r_fro2 * self.rinv_fro2).sqrt()
    }

    /// Mean squared LOO residual `mean((r_i / (1 - h_i))^2)`, not normalized.
    pub fn loo_mse(&self) -> Result<f64> {
        loo_mse(&self.residual, &self.leverage)
    }
}

fn loo_mse(residual: &[f64], leverage: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for (i, (&r, &h)) in residual.iter().zip(leverage).enumerate() {
        if h >= 1.0 - LEVERAGE_GUARD {
            return Err(Error::SaturatedLeverage { index: i, leverage: h });
        }
        let e = r / (1.0 - h);
        acc += e * e;
    }
    Ok(acc / residual.len() as f64)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Unbiased sample variance.
pub fn sample_variance(y: &[f64]) -> f64 {
    let n = y.len();
    if n < 2 {
        return 0.0;
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
}

/// Relative leave-one-out error of the linear model `psi . coefficients`
/// against `y`, via the hat-matrix shortcut (no refitting). The leverages
/// come from a fresh factorization of `psi`.
pub fn loo_error(psi: ArrayView2<f64>, y: &[f64], coefficients: &[f64]) -> Result<f64> {
    let (n, p) = psi.dim();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    if coefficients.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: coefficients.len(),
        });
    }
    if p >= n {
        return Err(Error::BasisTooLarge { card: p, n });
    }
    let var = sample_variance(y);
    if var == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let mut qr = IncrementalQr::new(y);
    for j in 0..p {
        let col = psi.column(j).to_vec();
        if qr.push(&col)? == Push::Dependent {
            return Err(Error::RankDeficient);
        }
    }
    let residual: Vec<f64> = (0..n)
        .map(|i| y[i] - psi.row(i).iter().zip(coefficients).map(|(a, c)| a * c).sum::<f64>())
        .collect();
    Ok(loo_mse(&residual, qr.leverages())? / var)
}

/// Correction factor `(1 - card/N)^{-1} (1 + tr((Psi^T Psi)^{-1}))` for the
/// LOO error of a model with `card` terms fitted on `n` points.
pub fn correction_factor(n: usize, card: usize, trace_inverse_gram: f64) -> Result<f64> {
    if card >= n {
        return Err(Error::BasisTooLarge { card, n });
    }
    Ok((1.0 + trace_inverse_gram) / (1.0 - card as f64 / n as f64))
}

/// Corrected LOO error of the least-squares model on `psi` (all columns).
pub fn corrected_loo(err_loo: f64, psi: ArrayView2<f64>) -> Result<f64> {
    let (n, p) = psi.dim();
    if p >= n {
        return Err(Error::BasisTooLarge { card: p, n });
    }
    let mut qr = IncrementalQr::new(&vec![0.0; n]);
    for j in 0..p {
        if qr.push(&psi.column(j).to_vec())? == Push::Dependent {
            return Err(Error::RankDeficient);
        }
    }
    Ok(err_loo * correction_factor(n, p, qr.trace_inverse_gram())?)
}
