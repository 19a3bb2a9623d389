mod support;

use proptest::prelude::*;
use roybounds::bounds::BoundOptions;
use roybounds::envelopes::{crossing_test, envelopes, lower_envelope_of, upper_envelope};
use roybounds::grid::GridMatrix;
use roybounds::kernel::ConditionalCdfTable;
use roybounds::model::{population_tables, CostFamily};
use roybounds::presets::{population_grid, random_family_dgp};
use roybounds::rng::stream_rng;
use support::fuzz_table;

fn upper_again(table: &ConditionalCdfTable<f64>, fhigh: &GridMatrix<f64>) -> GridMatrix<f64> {
    let zero = fhigh.map(|_| 0.0);
    let again = ConditionalCdfTable::from_parts(
        table.grid.clone(),
        fhigh.clone(),
        zero,
        vec![0.0; table.nz()],
        None,
    )
    .unwrap();
    upper_envelope(&again, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn envelopes_are_idempotent(seed in any::<u64>(), ny in 2usize..30, nz in 1usize..8) {
        let table = fuzz_table(seed, ny, nz);
        let env = envelopes(&table, 0.0);
        prop_assert_eq!(lower_envelope_of(&env.flow), env.flow.clone());
        prop_assert_eq!(upper_again(&table, &env.fhigh), env.fhigh);
    }

    /// Each envelope dominates its input, is monotone in `z`, and is attained by a column on the
    /// admissible side, so no tighter monotone bound exists.
    #[test]
    fn envelopes_are_minimal(seed in any::<u64>(), ny in 2usize..30, nz in 1usize..8) {
        let table = fuzz_table(seed, ny, nz);
        let env = envelopes(&table, 0.0);
        for iy in 0..ny {
            for iz in 0..nz {
                let lo = env.flow.get(iy, iz);
                prop_assert!(lo >= table.f.get(iy, iz));
                if iz + 1 < nz {
                    prop_assert!(lo >= env.flow.get(iy, iz + 1));
                }
                prop_assert!((iz..nz).any(|j| table.f.get(iy, j) == lo));
                let hi = env.fhigh.get(iy, iz);
                let cap = |j: usize| (table.f0.get(iy, j) + table.p[j]).min(1.0);
                prop_assert!(hi <= cap(iz));
                if iz > 0 {
                    prop_assert!(hi <= env.fhigh.get(iy, iz - 1));
                }
                prop_assert!((0..=iz).any(|j| cap(j) == hi));
            }
        }
    }
}

#[test]
fn crossing_never_rejects_valid_population_tables() {
    let families = [
        CostFamily::PureRoy,
        CostFamily::QuasiLinear,
        CostFamily::Multiplicative,
        CostFamily::Quadratic,
        CostFamily::Isoelastic,
        CostFamily::Custom,
    ];
    let tol = BoundOptions::population(0.0).crossing_tol;
    for (k, family) in families.into_iter().enumerate() {
        let mut rng = stream_rng(77, k as u64);
        for draw in 0..8 {
            let dgp = random_family_dgp(family, &mut rng);
            let grid = population_grid(&dgp, 60, 6, 0.005, 0.99).unwrap();
            let table = population_tables(&dgp, &grid).unwrap();
            let report = crossing_test(&envelopes(&table, 0.0), tol);
            assert!(
                !report.rejected,
                "{family:?} draw {draw}: gap {}",
                report.worst_gap
            );
        }
    }
}
