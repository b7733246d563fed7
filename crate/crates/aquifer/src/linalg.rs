//! Banded matrices with an in-place LU factorization (no pivoting) and a
//! restarted, right-preconditioned GMRES.
//!
//! The grid operators are ordered with the vertical index running fastest,
//! so their bandwidth is the number of cell rows. Both factorized operators
//! are M-matrices (two-point fluxes plus upwinded advection), for which LU
//! without pivoting is stable; a non-positive pivot is reported as an error.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku, "({i}, {j}) outside band");
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku || j >= self.n {
            return 0.0;
        }
        self.data[self.offset(i, j)]
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let o = self.offset(i, j);
        self.data[o] += v;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.data[self.offset(i, i)]).collect()
    }

    /// Multiply row `i` by `s[i]`.
    pub fn scale_rows(&mut self, s: &[f64]) {
        for (row, &si) in self.data.chunks_mut(self.width).zip(s) {
            row.iter_mut().for_each(|v| *v *= si);
        }
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        let k = self.kl.min(self.ku);
        for i in 0..self.n {
            for j in i + 1..(i + k + 1).min(self.n) {
                let (a, b) = (self.get(i, j), self.get(j, i));
                if (a - b).abs() > rel_tol * a.abs().max(b.abs()) {
                    return false;
                }
            }
        }
        true
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.kl);
            let j1 = (i + self.ku + 1).min(self.n);
            let row = &self.data[self.offset(i, j0)..self.offset(i, j1 - 1) + 1];
            y[i] = row.iter().zip(&x[j0..j1]).map(|(a, b)| a * b).sum();
        }
    }

    /// In-place LU factorization. Every pivot must be positive.
    pub fn factorize(mut self) -> std::result::Result<BandLu, (usize, f64)> {
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.width);
        for p in 0..n {
            let piv = self.data[p * w + kl];
            if !(piv > 0.0) || !piv.is_finite() {
                return Err((p, piv));
            }
            let jend = (p + ku).min(n - 1);
            let len = jend - p;
            let (head, tail) = self.data.split_at_mut((p + 1) * w);
            let urow = &head[p * w + kl + 1..p * w + kl + 1 + len];
            for r in p + 1..(p + kl + 1).min(n) {
                let base = (r - p - 1) * w;
                let lo = base + (p + kl - r);
                let l = tail[lo] / piv;
                tail[lo] = l;
                if l == 0.0 {
                    continue;
                }
                let start = lo + 1;
                for (a, u) in tail[start..start + len].iter_mut().zip(urow) {
                    *a -= l * u;
                }
            }
        }
        Ok(BandLu { m: self })
    }
}

/// LU factors stored in band form (unit lower factor implicit).
#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
}

impl BandLu {
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let m = &self.m;
        let (n, kl, ku, w) = (m.n, m.kl, m.ku, m.width);
        for i in 0..n {
            let j0 = i.saturating_sub(kl);
            let row = &m.data[i * w + (j0 + kl - i)..i * w + kl];
            let s: f64 = row.iter().zip(&x[j0..i]).map(|(a, b)| a * b).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let j1 = (i + ku + 1).min(n);
            let row = &m.data[i * w + kl + 1..i * w + kl + (j1 - i)];
            let s: f64 = row.iter().zip(&x[i + 1..j1]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / m.data[i * w + kl];
        }
    }
}

pub struct GmresOutcome {
    pub iterations: usize,
    pub residual: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve `A x = b` by GMRES(restart) with right preconditioner `M^{-1}`,
/// starting from the contents of `x`, until `||b - A x|| <= tol ||b||`.
/// Gives up with [`Error::NotConverged`] after `max_iterations`, or as soon as
/// a whole restart cycle fails to cut the true residual by 10%.
pub fn gmres(
    apply: impl Fn(&[f64], &mut [f64]),
    precondition: impl Fn(&mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    restart: usize,
    max_iterations: usize,
) -> Result<GmresOutcome> {
    let n = b.len();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(GmresOutcome {
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut total = 0;
    let mut residual;
    let mut previous = f64::INFINITY;
    loop {
        apply(x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let beta = norm(&r);
        residual = beta / b_norm;
        if residual <= tol {
            return Ok(GmresOutcome {
                iterations: total,
                residual,
            });
        }
        if total >= max_iterations || residual > 0.9 * previous {
            return Err(Error::NotConverged {
                iterations: total,
                residual,
            });
        }
        previous = residual;
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k = 0;
        while k < restart && total < max_iterations {
            z.copy_from_slice(&v[k]);
            precondition(&mut z);
            apply(&z, &mut w);
            for j in 0..=k {
                let hj = dot(&w, &v[j]);
                h[j][k] = hj;
                w.iter_mut().zip(&v[j]).for_each(|(a, b)| *a -= hj * b);
            }
            // Second Gram-Schmidt pass for orthogonality at tight tolerances.
            for j in 0..=k {
                let hj = dot(&w, &v[j]);
                h[j][k] += hj;
                w.iter_mut().zip(&v[j]).for_each(|(a, b)| *a -= hj * b);
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let d = h[k][k].hypot(h[k + 1][k]);
            cs[k] = h[k][k] / d;
            sn[k] = h[k + 1][k] / d;
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k += 1;
            residual = g[k].abs() / b_norm;
            if residual <= tol || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wi| wi / hn).collect());
        }
        // Back substitution for the Krylov coefficients.
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        z.iter_mut().for_each(|v| *v = 0.0);
        for (j, yj) in y.iter().enumerate() {
            z.iter_mut().zip(&v[j]).for_each(|(a, b)| *a += yj * b);
        }
        precondition(&mut z);
        x.iter_mut().zip(&z).for_each(|(a, b)| *a += b);
    }
}
