//! The bundled cross-section at nominal and perturbed parameters.

use aquifer::{CrossSectionModel, ModelData, Parameters};

fn nominal_solution() -> (CrossSectionModel, aquifer::Solution) {
    let m = CrossSectionModel::bundled();
    let s = m.run(&m.nominal()).unwrap();
    (m, s)
}

#[test]
fn nominal_outflow_split_and_balance() {
    let (m, s) = nominal_solution();
    let fractions = m.outflow_fractions(&s.budget);
    let get = |n: &str| fractions.iter().find(|(name, _)| name == n).unwrap().1;
    assert!((get("top") - 0.02).abs() <= 0.10);
    assert!((get("oxfordian") - 0.60).abs() <= 0.10);
    assert!((get("dogger") - 0.38).abs() <= 0.10);
    let sum: f64 = fractions.iter().map(|f| f.1).sum();
    assert!((sum - 1.0).abs() <= 1e-8);
    assert!(s.budget.imbalance() <= 1e-8, "{}", s.budget.imbalance());
}

#[test]
fn nominal_cells_conserve_mass() {
    let (m, s) = nominal_solution();
    let grid = m.grid();
    let imbalance = s.flow.cell_imbalance(grid);
    for c in 0..grid.len() {
        let (i, k) = grid.ik(c);
        let through = s.flow.xflux[grid.xface(i, k)].abs()
            + s.flow.xflux[grid.xface(i + 1, k)].abs()
            + s.flow.zflux[grid.zface(i, k)].abs()
            + s.flow.zflux[grid.zface(i, k + 1)].abs();
        assert!(imbalance[c].abs() <= 1e-8 * through.max(f64::MIN_POSITIVE), "cell {c}");
    }
}

#[test]
fn nominal_lifetime_in_confining_layer() {
    let (m, s) = nominal_solution();
    assert!((40_000.0..=200_000.0).contains(&s.response), "{}", s.response);
    assert!(s.mle.years.iter().all(|&e| e >= 0.0));
    // Mid-depth of the confining layer, across the whole section.
    let grid = m.grid();
    let tz = &m.data().target_zone;
    for c in 0..grid.len() {
        let z = grid.z_center(grid.ik(c).1);
        if tz.z[0] <= z && z <= tz.z[1] {
            assert_eq!(m.layer_of_cell(c), "C2");
            assert!(s.mle.years[c] > 40_000.0, "cell {c}: {}", s.mle.years[c]);
        }
    }
}

#[test]
fn evaluation_is_deterministic() {
    let m = CrossSectionModel::bundled();
    let x = m.nominal();
    assert_eq!(m.evaluate(&x).unwrap().to_bits(), m.evaluate(&x).unwrap().to_bits());
}

#[test]
fn more_conductive_dogger_flushes_faster() {
    let m = CrossSectionModel::bundled();
    let data = m.data();
    let d4 = data.layers.iter().position(|l| l.name == "D4").unwrap();
    let layer = &data.layers[d4];
    let mut prev = f64::INFINITY;
    for phi in [layer.phi_min, 0.06, layer.phi_nominal, 0.12, layer.phi_max] {
        let mut p = Parameters::nominal(data);
        p.layers[d4].phi = phi;
        let r = m.evaluate(&p.to_vec()).unwrap();
        assert!(r <= prev * (1.0 + 1e-9), "phi {phi}: {r} > {prev}");
        prev = r;
    }
}

#[test]
fn grid_refinement_changes_response_little() {
    let coarse = CrossSectionModel::with_resolution(ModelData::bundled(), 125, 52).unwrap();
    let fine = CrossSectionModel::bundled();
    let a = coarse.evaluate(&coarse.nominal()).unwrap();
    let b = fine.evaluate(&fine.nominal()).unwrap();
    assert!((a - b).abs() <= 0.15 * b, "{a} vs {b}");
}

#[test]
fn range_corners_solve() {
    // Rotated tensors at both extreme angles exercise the cross terms.
    let m = CrossSectionModel::bundled();
    for pick in [0usize, 1] {
        let x: Vec<f64> = m
            .parameter_specs()
            .iter()
            .map(|s| if pick == 0 { s.lower } else { s.upper })
            .collect();
        let s = m.run(&x).unwrap();
        assert!(s.response > 0.0);
        assert!(s.budget.imbalance() <= 1e-8);
    }
}

#[test]
fn field_export_has_one_row_per_cell() {
    let (m, s) = nominal_solution();
    let mut buf = Vec::new();
    m.write_field_csv(&s, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,z,layer,H,E"));
    assert_eq!(lines.count(), m.grid().len());
}

#[test]
fn out_of_range_parameters_are_rejected() {
    let m = CrossSectionModel::bundled();
    let mut x = m.nominal();
    x[0] = 0.5;
    assert!(matches!(m.evaluate(&x), Err(aquifer::Error::ParameterOutOfRange { .. })));
}
