//! Hat-matrix leave-one-out error against literal refits.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ShapeBuilder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_pce::regression::{loo_error, sample_variance, IncrementalQr};

fn naive_loo(psi: &Array2<f64>, y: &[f64]) -> f64 {
    let (n, p) = psi.dim();
    let mut acc = 0.0;
    for i in 0..n {
        let rows: Vec<usize> = (0..n).filter(|&k| k != i).collect();
        let a = DMatrix::from_fn(n - 1, p, |r, c| psi[[rows[r], c]]);
        let b = DVector::from_iterator(n - 1, rows.iter().map(|&k| y[k]));
        let coef = a.clone().svd(true, true).solve(&b, 1e-14).unwrap();
        let pred: f64 = (0..p).map(|c| psi[[i, c]] * coef[c]).sum();
        acc += (y[i] - pred).powi(2);
    }
    acc / n as f64 / sample_variance(y)
}

#[test]
fn fifty_random_problems() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..50 {
        let n = rng.random_range(15..=40);
        let p = rng.random_range(2..=10);
        let psi = Array2::from_shape_fn((n, p).f(), |(_, j)| if j == 0 { 1.0 } else { rng.random_range(-1.0..1.0) });
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut qr = IncrementalQr::new(&y);
        for j in 0..p {
            qr.push(&psi.column(j).to_vec()).unwrap();
        }
        let fast = loo_error(psi.view(), &y, &qr.coefficients()).unwrap();
        let slow = naive_loo(&psi, &y);
        assert!((fast - slow).abs() <= 1e-8 * slow, "n={n} p={p}: {fast} vs {slow}");
    }
}

#[test]
fn linear_data_has_zero_loo() {
    let n = 20;
    let psi = Array2::from_shape_fn((n, 2).f(), |(i, j)| if j == 0 { 1.0 } else { i as f64 / n as f64 });
    let y: Vec<f64> = (0..n).map(|i| 3.0 - 2.0 * psi[[i, 1]]).collect();
    let err = loo_error(psi.view(), &y, &[3.0, -2.0]).unwrap();
    assert!(err < 1e-12);
}
