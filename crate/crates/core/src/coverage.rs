//! Monte Carlo coverage of the confidence band against the population bound of a known DGP.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{cost_bounds_pf, BoundOptions};
use crate::error::{Error, Result};
use crate::grid::{EvaluationGrid, GridMatrix};
use crate::inference::{confidence_band, BandConfig, BandSide};
use crate::kernel::silverman_bandwidth;
use crate::model::{generate_sample, population_tables, DgpSpec};
use crate::presets::population_grid;
use crate::rng::{stream_rng, streams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageConfig {
    pub dgp: DgpSpec,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
    /// `band.seed` is replaced by a per-replication seed.
    pub band: BandConfig,
    /// `None` applies the rule-of-thumb bandwidth to each replication.
    pub bandwidth: Option<f64>,
    pub epsilon: Option<f64>,
    pub subset: Option<Vec<f64>>,
    /// `None` uses 200 × 8 points over the central 90% of the population incomes.
    pub grid: Option<EvaluationGrid<f64>>,
    /// Slack allowed when comparing the band with the population bound.
    pub tolerance: f64,
}

impl CoverageConfig {
    pub fn new(dgp: DgpSpec, n: usize, replications: usize, seed: u64) -> Self {
        Self {
            dgp,
            n,
            replications,
            seed,
            band: BandConfig::default(),
            bandwidth: None,
            epsilon: None,
            subset: None,
            grid: None,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub config: CoverageConfig,
    pub grid: EvaluationGrid<f64>,
    /// Population `C̲` (or `C̄` for an upper band).
    pub truth: GridMatrix<Option<f64>>,
    /// Per-cell frequency of `Cₙ ≤ C̲ + tol` (`Cₙ ≥ C̄ − tol` for an upper band).
    pub pointwise: GridMatrix<Option<f64>>,
    /// Frequency of replications covering at every compared cell.
    pub uniform: f64,
    pub violation_frequency: f64,
    pub replication_covered: Vec<bool>,
    /// Largest excess of the band over the bound per replication.
    pub replication_excess: Vec<f64>,
    pub critical_values: Vec<f64>,
    /// Cell-level outcomes when a single replication was run.
    pub cells: Option<GridMatrix<Option<bool>>>,
}

/// Seed of replication `r` under the master seed.
pub fn replication_seed(seed: u64, r: usize) -> u64 {
    stream_rng(seed, streams::REPLICATION_BASE + r as u64).random()
}

pub fn run_coverage(config: &CoverageConfig) -> Result<CoverageReport> {
    if config.replications == 0 {
        return Err(Error::Config("at least one replication is required".into()));
    }
    config.band.validate()?;
    let grid = match &config.grid {
        Some(g) => g.clone(),
        None => population_grid(&config.dgp, 200, 8, 0.05, 0.95)?,
    };
    let table = population_tables(&config.dgp, &grid)?;
    let surface = cost_bounds_pf(
        &table,
        &BoundOptions::population(config.dgp.lower_support_bound),
    );
    let side = config.band.side;
    let truth = match side {
        BandSide::Lower => surface.clow.clone(),
        BandSide::Upper => surface.chigh.clone(),
    };
    let tol = config.tolerance;
    type Outcome = (GridMatrix<Option<bool>>, f64, f64);
    let outcomes: Vec<Outcome> = (0..config.replications)
        .into_par_iter()
        .map(|r| -> Result<Outcome> {
            let s = replication_seed(config.seed, r);
            let sample = generate_sample(&config.dgp, config.n, s)?;
            let h = match config.bandwidth {
                Some(h) => h,
                None => silverman_bandwidth(sample.z())?,
            };
            let band_config = BandConfig {
                seed: s,
                ..config.band.clone()
            };
            let band = confidence_band(
                &sample,
                &grid,
                h,
                config.epsilon,
                config.subset.as_deref(),
                &band_config,
            )?;
            let mut excess = f64::NEG_INFINITY;
            let cells = GridMatrix::from_fn(grid.ny(), grid.nz(), |iy, iz| {
                let (c, t) = (band.cn.get(iy, iz)?, truth.get(iy, iz)?);
                let gap = match side {
                    BandSide::Lower => c - t,
                    BandSide::Upper => t - c,
                };
                excess = excess.max(gap);
                Some(gap <= tol)
            });
            Ok((cells, excess, band.critical_value))
        })
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| Error::Replication {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let reps = outcomes.len() as f64;
    let pointwise = GridMatrix::from_fn(grid.ny(), grid.nz(), |iy, iz| {
        let hits: Vec<bool> = outcomes.iter().filter_map(|o| o.0.get(iy, iz)).collect();
        if hits.is_empty() {
            None
        } else {
            Some(hits.iter().filter(|h| **h).count() as f64 / hits.len() as f64)
        }
    });
    let replication_covered: Vec<bool> = outcomes
        .iter()
        .map(|o| o.0.values().iter().all(|c| c.unwrap_or(true)))
        .collect();
    let uniform = replication_covered.iter().filter(|c| **c).count() as f64 / reps;
    Ok(CoverageReport {
        config: config.clone(),
        grid,
        truth,
        pointwise,
        uniform,
        violation_frequency: 1.0 - uniform,
        replication_excess: outcomes.iter().map(|o| o.1).collect(),
        critical_values: outcomes.iter().map(|o| o.2).collect(),
        cells: if outcomes.len() == 1 {
            Some(outcomes[0].0.clone())
        } else {
            None
        },
        replication_covered,
    })
}
