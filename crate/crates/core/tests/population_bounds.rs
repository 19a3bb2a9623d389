use roybounds::bounds::{cost_bounds_pf, cost_bounds_pf_detailed, sharpness_check, BoundOptions};
use roybounds::model::{population_tables, true_cost, CostFamily};
use roybounds::presets::{
    isoelastic_declining_cost, population_grid, pure_roy_uniform, quasi_linear_lognormal,
    random_family_dgp,
};
use roybounds::rng::stream_rng;

#[test]
fn pure_roy_lower_bound_is_zero() {
    let dgp = pure_roy_uniform();
    let grid = population_grid(&dgp, 200, 10, 0.005, 0.99).unwrap();
    let table = population_tables(&dgp, &grid).unwrap();
    let surface = cost_bounds_pf(&table, &BoundOptions::population(0.0));
    assert!(!surface.rejected);
    assert!(surface.max_lower().unwrap() <= 1e-9);
}

#[test]
fn all_untreated_table_is_unidentified() {
    let dgp = quasi_linear_lognormal(1.0);
    let grid = population_grid(&dgp, 20, 3, 0.01, 0.99).unwrap();
    let mut table = population_tables(&dgp, &grid).unwrap();
    table.f0 = table.f.clone();
    table.f1 = table.f1.map(|_| 0.0);
    table.p = vec![0.0; 3];
    let surface = cost_bounds_pf(&table, &BoundOptions::population(0.0));
    assert!(surface.identified.values().iter().all(|v| !v));
    assert!(surface.max_lower().is_none());
}

#[test]
fn quasi_linear_cost_is_contained() {
    let dgp = quasi_linear_lognormal(3.0);
    let grid = population_grid(&dgp, 200, 10, 0.005, 0.99).unwrap();
    let table = population_tables(&dgp, &grid).unwrap();
    let surface = cost_bounds_pf(&table, &BoundOptions::population(0.0));
    assert!(!surface.rejected, "{:?}", surface.crossing.worst_gap);
    let mut checked = 0;
    for iz in 0..grid.nz() {
        for iy in 0..grid.ny() {
            if let Some(lo) = surface.clow.get(iy, iz) {
                assert!(lo <= 3.0 + 1e-8, "lower {lo} at ({iy},{iz})");
                checked += 1;
            }
            if let Some(hi) = surface.chigh.get(iy, iz) {
                assert!(hi >= 3.0 - 1e-8, "upper {hi} at ({iy},{iz})");
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn every_family_is_contained() {
    let families = [
        CostFamily::QuasiLinear,
        CostFamily::Multiplicative,
        CostFamily::Quadratic,
        CostFamily::Isoelastic,
        CostFamily::Custom,
    ];
    for (k, family) in families.into_iter().enumerate() {
        let mut rng = stream_rng(2024, k as u64);
        for draw in 0..5 {
            let dgp = random_family_dgp(family, &mut rng);
            let grid = population_grid(&dgp, 80, 6, 0.005, 0.99).unwrap();
            let table = population_tables(&dgp, &grid).unwrap();
            let surface = cost_bounds_pf(&table, &BoundOptions::population(0.0));
            assert!(
                !surface.rejected,
                "{family:?} draw {draw} rejected {:?} {:?}",
                surface.crossing.worst_gap,
                &surface.crossing.locations[..surface.crossing.locations.len().min(5)]
            );
            let mut worst = f64::NEG_INFINITY;
            for iz in 0..grid.nz() {
                for iy in 0..grid.ny() {
                    let c = true_cost(&dgp, grid.y()[iy], grid.z()[iz]).unwrap();
                    if let Some(lo) = surface.clow.get(iy, iz) {
                        worst = worst.max(lo - c);
                    }
                    if let Some(hi) = surface.chigh.get(iy, iz) {
                        worst = worst.max(c - hi);
                    }
                }
            }
            assert!(
                worst <= 1e-8,
                "{family:?} draw {draw}: containment gap {worst}"
            );
        }
    }
}

#[test]
fn lower_bound_model_is_sharp() {
    let dgp = isoelastic_declining_cost();
    let grid = population_grid(&dgp, 200, 10, 0.005, 0.99).unwrap();
    let table = population_tables(&dgp, &grid).unwrap();
    let pf = cost_bounds_pf_detailed(&table, &BoundOptions::population(0.0));
    let report = sharpness_check(&table, &pf.surface, &pf.envelopes);
    assert!(report.passes, "{report:?}");
}
