use proptest::prelude::*;
use sparse_pce::basis::enumerate_hyperbolic;
use sparse_pce::sensitivity::{all_group_indices, sobol_closed, sobol_first, sobol_group, sobol_second, sobol_total};
use sparse_pce::{Marginal, RandomVector, ResponseScale, SparsePce};

fn random_pce(dim: usize, coef: Vec<f64>, keep: Vec<bool>) -> SparsePce {
    let cand = enumerate_hyperbolic(dim, 4, 0.7).unwrap();
    let positions: Vec<usize> = (0..cand.len()).filter(|&k| k == 0 || keep[k % keep.len()]).collect();
    let set = cand.subset(&positions);
    let c = (0..set.len()).map(|k| coef[k % coef.len()]).collect();
    let rv = RandomVector::iid(dim, Marginal::gaussian(0.0, 1.0).unwrap()).unwrap();
    SparsePce::from_coefficients(rv, set, c, ResponseScale::Original).unwrap()
}

proptest! {
    #[test]
    fn ladder_invariants(
        dim in 2usize..6,
        coef in prop::collection::vec(-5.0f64..5.0, 1..40),
        keep in prop::collection::vec(any::<bool>(), 1..17),
    ) {
        let pce = random_pce(dim, coef, keep);
        let s = sobol_first(&pce);
        let t = sobol_total(&pce);
        for i in 0..dim {
            prop_assert!(0.0 <= s[i] && s[i] <= t[i] + 1e-15 && t[i] <= 1.0 + 1e-12);
            prop_assert_eq!(sobol_group(&pce, &[i]), s[i]);
        }
        for p in sobol_second(&pce) {
            prop_assert_eq!(sobol_group(&pce, &[p.i, p.j]), p.value);
        }
        let groups = all_group_indices(&pce);
        // Closed index of a pair = both singles + their interaction.
        let closed: f64 = groups.iter().filter(|(u, _)| u.iter().all(|&v| v < 2)).map(|(_, v)| v).sum();
        prop_assert!((sobol_closed(&pce, &[0, 1]) - closed).abs() < 1e-12);
        if !groups.is_empty() {
            prop_assert!((sobol_closed(&pce, &(0..dim).collect::<Vec<_>>()) - 1.0).abs() < 1e-12);
            let sum: f64 = groups.values().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn indices_are_scale_invariant(
        coef in prop::collection::vec(-5.0f64..5.0, 1..30),
        factor in 0.01f64..100.0,
    ) {
        let a = random_pce(3, coef.clone(), vec![true]);
        let scaled: Vec<f64> = a.coefficients().iter().map(|c| c * factor).collect();
        let b = SparsePce::from_coefficients(a.input().clone(), a.active_set().clone(), scaled, ResponseScale::Original).unwrap();
        for (x, y) in sobol_total(&a).iter().zip(sobol_total(&b)) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}
