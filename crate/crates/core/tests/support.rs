#![allow(dead_code)]

use rand::Rng;
use roybounds::grid::{linspace, EvaluationGrid, GridMatrix};
use roybounds::kernel::ConditionalCdfTable;
use roybounds::rng::stream_rng;

/// Random sub-distribution table: non-decreasing `F0`, `F1` columns with `F0 + F1 ≤ 1`.
pub fn fuzz_table(seed: u64, ny: usize, nz: usize) -> ConditionalCdfTable<f64> {
    let mut rng = stream_rng(seed, 0);
    let mut f0 = Vec::with_capacity(nz);
    let mut f1 = Vec::with_capacity(nz);
    let mut p = Vec::with_capacity(nz);
    for _ in 0..nz {
        let share: f64 = rng.random_range(0.05..0.95);
        let mut c0: Vec<f64> = (0..ny).map(|_| rng.random::<f64>()).collect();
        let mut c1: Vec<f64> = (0..ny).map(|_| rng.random::<f64>()).collect();
        c0.sort_by(f64::total_cmp);
        c1.sort_by(f64::total_cmp);
        let (m0, m1) = (c0[ny - 1], c1[ny - 1]);
        f0.push(c0.iter().map(|v| v / m0 * (1.0 - share)).collect());
        f1.push(c1.iter().map(|v| v / m1 * share).collect());
        p.push(share);
    }
    let grid = EvaluationGrid::new(linspace(0.0, 1.0, ny), linspace(0.0, 1.0, nz)).unwrap();
    ConditionalCdfTable::from_parts(
        grid,
        GridMatrix::from_columns(f0),
        GridMatrix::from_columns(f1),
        p,
        None,
    )
    .unwrap()
}
