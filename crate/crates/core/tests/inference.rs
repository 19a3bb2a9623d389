use roybounds::bounds::{cost_bounds_pf, BoundOptions, POPULATION_ID_TOL};
use roybounds::grid::{linspace, EvaluationGrid};
use roybounds::inference::{
    confidence_band, crossing_inference, fiber_estimates, g_table_from_tables, BandConfig, BandSide,
};
use roybounds::kernel::silverman_bandwidth;
use roybounds::model::{generate_sample, population_tables, ObservationSample};
use roybounds::presets::{
    isoelastic_declining_cost, population_grid, pure_roy_uniform, quasi_linear_lognormal,
};

fn config(alpha: f64, seed: u64) -> BandConfig {
    BandConfig {
        alpha,
        bootstrap: 60,
        seed,
        ..BandConfig::default()
    }
}

fn setup(n: usize, seed: u64) -> (ObservationSample<f64>, EvaluationGrid<f64>, f64) {
    let dgp = quasi_linear_lognormal(1.0);
    let sample = generate_sample(&dgp, n, seed).unwrap();
    let grid = population_grid(&dgp, 60, 5, 0.05, 0.95).unwrap();
    let h = silverman_bandwidth(sample.z()).unwrap();
    (sample, grid, h)
}

#[test]
fn band_is_deterministic() {
    let (s, g, h) = setup(800, 1);
    let a = confidence_band(&s, &g, h, None, None, &config(0.05, 9)).unwrap();
    let b = confidence_band(&s, &g, h, None, None, &config(0.05, 9)).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}

#[test]
fn band_is_monotone_in_alpha_and_below_the_estimate() {
    let (s, g, h) = setup(800, 2);
    let strict = confidence_band(&s, &g, h, None, None, &config(0.01, 4)).unwrap();
    let loose = confidence_band(&s, &g, h, None, None, &config(0.2, 4)).unwrap();
    assert!(strict.critical_value >= loose.critical_value);
    for ((a, b), e) in strict
        .cn
        .values()
        .iter()
        .zip(loose.cn.values())
        .zip(loose.estimate.values())
    {
        if let (Some(a), Some(b), Some(e)) = (a, b, e) {
            assert!(a <= &(b + 1e-12), "{a} > {b}");
            assert!(b <= &(e + 1e-12), "{b} > {e}");
        }
    }
}

#[test]
fn upper_band_dominates_its_estimate() {
    let (s, g, h) = setup(800, 3);
    let cfg = BandConfig {
        side: BandSide::Upper,
        ..config(0.05, 5)
    };
    let band = confidence_band(&s, &g, h, None, None, &cfg).unwrap();
    let mut seen = 0;
    for (c, e) in band.cn.values().iter().zip(band.estimate.values()) {
        if let (Some(c), Some(e)) = (c, e) {
            assert!(c >= &(e - 1e-12));
            seen += 1;
        }
    }
    assert!(seen > 0);
}

#[test]
fn standard_errors_shrink_with_sample_size() {
    let mean_se = |n: usize| {
        let (s, g, h) = setup(n, 7);
        let band = confidence_band(&s, &g, h, None, None, &config(0.05, 1)).unwrap();
        let v: Vec<f64> = band.se.values().iter().flatten().copied().collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let (small, large) = (mean_se(500), mean_se(8000));
    assert!(large < small, "{large} vs {small}");
}

#[test]
fn standard_errors_are_floored() {
    // every individual identical within sector, so bootstrap tables barely move
    let n = 400;
    let z = linspace(0.0, 1.0, n);
    let d: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
    let y: Vec<f64> = d.iter().map(|&d| if d { 2.0 } else { 1.0 }).collect();
    let s = ObservationSample::new(y, d, z, 0.0).unwrap();
    let g = EvaluationGrid::new(linspace(0.5, 2.5, 9), linspace(0.2, 0.8, 3)).unwrap();
    let band = confidence_band(&s, &g, 0.3, None, None, &config(0.05, 0)).unwrap();
    assert!(band.se.values().iter().flatten().all(|v| *v >= 1e-8));
}

/// On population tables without monotonization slack the fiber estimate is the lower bound.
#[test]
fn population_fibers_reproduce_the_lower_bound() {
    let dgp = isoelastic_declining_cost();
    let grid = population_grid(&dgp, 120, 6, 0.01, 0.99).unwrap();
    let table = population_tables(&dgp, &grid).unwrap();
    let surface = cost_bounds_pf(&table, &BoundOptions::population(0.0));
    let g =
        g_table_from_tables(&table, BandSide::Lower, 0.0, Some(0.0), POPULATION_ID_TOL).unwrap();
    let theta = fiber_estimates(&g, false);
    let step = grid.max_y_spacing();
    let mut compared = 0;
    for iz in 0..grid.nz() {
        for iy in 0..grid.ny() {
            let min = g
                .fibers
                .iter()
                .zip(&theta)
                .filter(|(f, _)| f.iz == iz)
                .filter_map(|(_, t)| t[iy])
                .fold(f64::INFINITY, f64::min);
            if let (Some(lo), true) = (surface.clow.get(iy, iz), min.is_finite()) {
                let est = (grid.y()[iy] - min).max(0.0);
                assert!(
                    (est - lo).abs() <= step + 1e-9,
                    "({iy},{iz}): {est} vs {lo}"
                );
                compared += 1;
            }
        }
    }
    assert!(compared > 100);
}

#[test]
fn crossing_inference_accepts_pure_roy() {
    let dgp = pure_roy_uniform();
    let s = generate_sample(&dgp, 2000, 5).unwrap();
    let g = population_grid(&dgp, 60, 5, 0.05, 0.95).unwrap();
    let h = silverman_bandwidth(s.z()).unwrap();
    let c = crossing_inference(&s, &g, h, 0.05, 100, 0).unwrap();
    assert!(!c.rejected, "{c:?}");
}
