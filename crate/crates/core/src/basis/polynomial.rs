//! Orthonormal univariate polynomial families.
//!
//! Legendre polynomials are normalized against the uniform density 1/2 on
//! `[-1, 1]` (so `psi_n = sqrt(2n + 1) P_n`); Hermite polynomials are the
//! probabilists' family normalized by `1 / sqrt(n!)`. Both are evaluated with
//! their orthonormal three-term recurrences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Legendre,
    Hermite,
}

impl Family {
    /// Value of the orthonormal polynomial of degree `degree` at `u`.
    pub fn eval(self, degree: usize, u: f64) -> Result<f64> {
        let mut out = vec![0.0; degree + 1];
        self.eval_all(u, &mut out)?;
        Ok(out[degree])
    }

    /// Fill `out[n]` with the orthonormal polynomial of degree `n` at `u`
    /// for every `n < out.len()`.
    pub fn eval_all(self, u: f64, out: &mut [f64]) -> Result<()> {
        if self == Family::Legendre && !(-1.0..=1.0).contains(&u) {
            return Err(Error::LegendreDomain(u));
        }
        self.eval_all_unchecked(u, out);
        Ok(())
    }

    pub(crate) fn eval_all_unchecked(self, u: f64, out: &mut [f64]) {
        let Some(first) = out.first_mut() else {
            return;
        };
        *first = 1.0;
        if out.len() == 1 {
            return;
        }
        match self {
            Family::Legendre => {
                out[1] = 3f64.sqrt() * u;
                for n in 1..out.len() - 1 {
                    let nf = n as f64;
                    let a = ((2.0 * nf + 1.0) * (2.0 * nf + 3.0)).sqrt() / (nf + 1.0);
                    let b = nf / (nf + 1.0) * ((2.0 * nf + 3.0) / (2.0 * nf - 1.0)).sqrt();
                    out[n + 1] = a * u * out[n] - b * out[n - 1];
                }
            }
            Family::Hermite => {
                out[1] = u;
                for n in 1..out.len() - 1 {
                    let nf = n as f64;
                    out[n + 1] = (u * out[n] - nf.sqrt() * out[n - 1]) / (nf + 1.0).sqrt();
                }
            }
        }
    }
}

/// Orthonormal polynomial of the given family and degree evaluated at `u`.
pub fn eval_orthonormal_1d(family: Family, degree: usize, u: f64) -> Result<f64> {
    family.eval(degree, u)
}
