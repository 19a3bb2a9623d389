//! One-sided uniform confidence bands for the minimal cost (and, mirrored, the maximal cost).
//!
//! For every pair `z̃ ≥ z` the fiber `G(ỹ|z,z̃) = P(Y≤ỹ|z̃) − P(Y≤ỹ, D=0|z)` is ε-monotonized
//! and inverted at `F̂1(y|z)`, giving `θ̂(y;z,z̃)`; the lower bound estimate is
//! `y − min_{z̃} θ̂`. A pairs bootstrap yields standard errors and the law of the studentized
//! deviations, from which an intersection-bounds critical value with adaptive inequality
//! selection inflates each `θ̂` before the minimum is taken.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::estimated_id_tol;
use crate::envelopes::{envelopes, lower_inverse, upper_inverse};
use crate::error::{Error, Result};
use crate::grid::{empirical_quantile_sorted, EvaluationGrid, GridMatrix};
use crate::kernel::{estimate_tables, ConditionalCdfTable};
use crate::model::ObservationSample;
use crate::rng::{stream_rng, streams};
use crate::scalar::Scalar;

/// Floor on bootstrap standard errors, used where a cell never varies across replications.
pub const SE_FLOOR: f64 = 1e-8;

/// Default ε as a fraction of the range of the raw fiber values.
pub const EPSILON_SCALE: f64 = 1e-4;

pub const MIN_BOOTSTRAP: usize = 50;

/// Which cost bound a band covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandSide {
    /// `P(Cₙ ≤ C̲) ≥ 1 − α`, fibers over `z̃ ≥ z`.
    #[default]
    Lower,
    /// `P(Cₙ ≥ C̄) ≥ 1 − α`, fibers `F0(ỹ|z̃) + p(z̃)1{ỹ ≥ b̲} − F0(ỹ|z)` over `z̃ ≤ z`.
    Upper,
}

/// One `(z, z̃)` fiber over the income grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GFiber<T> {
    pub iz: usize,
    pub jz: usize,
    pub raw: Vec<T>,
    pub monotone: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct GTable<T> {
    pub grid: EvaluationGrid<T>,
    pub side: BandSide,
    pub bandwidth: Option<T>,
    pub epsilon: T,
    pub lower_support_bound: T,
    /// `F̂1(y|z)`, the inversion targets.
    pub f1: GridMatrix<T>,
    /// Cells with `id_tol ≤ F̂1(y|z) ≤ p̂(z) − id_tol`, inside the treated income support.
    pub supported: GridMatrix<bool>,
    /// Ordered by `z`, then `z̃`.
    pub fibers: Vec<GFiber<T>>,
}

impl<T: Scalar> GTable<T> {
    pub fn fiber(&self, iz: usize, jz: usize) -> Option<&GFiber<T>> {
        self.fibers.iter().find(|f| f.iz == iz && f.jz == jz)
    }
}

/// `L*_k = max(L_k, L*_{k−1} + ε)` along the income grid.
pub fn monotonize_eps<T: Scalar>(values: &[T], eps: T) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(values.len());
    for &v in values {
        let next = match out.last() {
            Some(&prev) => v.max(prev + eps),
            None => v,
        };
        out.push(next);
    }
    out
}

fn fiber_pairs(nz: usize, side: BandSide) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for iz in 0..nz {
        let range = match side {
            BandSide::Lower => iz..nz,
            BandSide::Upper => 0..iz + 1,
        };
        for jz in range {
            pairs.push((iz, jz));
        }
    }
    pairs
}

fn raw_fibers<T: Scalar>(
    table: &ConditionalCdfTable<T>,
    side: BandSide,
    b: T,
) -> Vec<(usize, usize, Vec<T>)> {
    let y = table.grid.y();
    fiber_pairs(table.nz(), side)
        .into_iter()
        .map(|(iz, jz)| {
            let raw = (0..table.ny())
                .map(|iy| match side {
                    BandSide::Lower => table.f.get(iy, jz) - table.f0.get(iy, iz),
                    BandSide::Upper => {
                        let jump = if y[iy] >= b { table.p[jz] } else { T::zero() };
                        (table.f0.get(iy, jz) + jump).min(T::one()) - table.f0.get(iy, iz)
                    }
                })
                .collect();
            (iz, jz, raw)
        })
        .collect()
}

/// Default ε for a table: [`EPSILON_SCALE`] times the range of its raw fiber values.
pub fn default_epsilon<T: Scalar>(table: &ConditionalCdfTable<T>, side: BandSide, b: T) -> T {
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for (_, _, raw) in raw_fibers(table, side, b) {
        for v in raw {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if hi > lo {
        T::lit(EPSILON_SCALE) * (hi - lo)
    } else {
        T::zero()
    }
}

/// Fibers of an already estimated (or population) table; `epsilon = None` picks the default.
pub fn g_table_from_tables<T: Scalar>(
    table: &ConditionalCdfTable<T>,
    side: BandSide,
    lower_support_bound: T,
    epsilon: Option<T>,
    id_tol: T,
) -> Result<GTable<T>> {
    let epsilon = epsilon.unwrap_or_else(|| default_epsilon(table, side, lower_support_bound));
    if !(epsilon >= T::zero()) {
        return Err(Error::Config(format!(
            "epsilon must be non-negative, got {epsilon}"
        )));
    }
    let fibers = raw_fibers(table, side, lower_support_bound)
        .into_iter()
        .map(|(iz, jz, raw)| GFiber {
            iz,
            jz,
            monotone: monotonize_eps(&raw, epsilon),
            raw,
        })
        .collect();
    Ok(GTable {
        grid: table.grid.clone(),
        side,
        bandwidth: table.bandwidth,
        epsilon,
        lower_support_bound,
        f1: table.f1.clone(),
        supported: GridMatrix::from_fn(table.ny(), table.nz(), |iy, iz| {
            let f1 = table.f1.get(iy, iz);
            f1 >= id_tol && f1 <= table.p[iz] - id_tol
        }),
        fibers,
    })
}

/// Local linear estimates of every fiber with `z̃ ≥ z` on the grid.
pub fn build_g_table<T: Scalar>(
    sample: &ObservationSample<T>,
    grid: &EvaluationGrid<T>,
    h: T,
    epsilon: Option<T>,
) -> Result<GTable<T>> {
    build_g_table_side(sample, grid, h, epsilon, BandSide::Lower)
}

pub fn build_g_table_side<T: Scalar>(
    sample: &ObservationSample<T>,
    grid: &EvaluationGrid<T>,
    h: T,
    epsilon: Option<T>,
    side: BandSide,
) -> Result<GTable<T>> {
    let table = estimate_tables(sample, grid, h)?;
    let id_tol = T::lit(estimated_id_tol(sample.len()));
    g_table_from_tables(&table, side, sample.lower_support_bound(), epsilon, id_tol)
}

/// Inverse of one monotonized fiber at `target`: `sup{ỹ : L*(ỹ) ≤ target}` for the lower side,
/// `inf{ỹ : U*(ỹ) ≥ target}` for the upper side (`None` if never reached).
pub fn invert_fiber<T: Scalar>(
    y_grid: &[T],
    fiber: &[T],
    target: T,
    side: BandSide,
    floor: T,
    interpolate: bool,
) -> Option<T> {
    match side {
        BandSide::Lower => Some(lower_inverse(y_grid, fiber, target, interpolate)),
        BandSide::Upper => upper_inverse(y_grid, fiber, target, floor, interpolate),
    }
}

/// `Ĝ₋(F̂1(y|z)|z,z̃)` for every fiber at `z` (grid indices `iy`, `iz`), as `(jz, value)`.
pub fn invert_g<T: Scalar>(
    g: &GTable<T>,
    iy: usize,
    iz: usize,
    interpolate: bool,
) -> Vec<(usize, Option<T>)> {
    let y = g.grid.y();
    let floor = g.lower_support_bound.min(y[0]);
    let target = g.f1.get(iy, iz);
    g.fibers
        .iter()
        .filter(|f| f.iz == iz)
        .map(|f| {
            (
                f.jz,
                invert_fiber(y, &f.monotone, target, g.side, floor, interpolate),
            )
        })
        .collect()
}

/// `θ̂` indexed `[fiber][iy]`, fibers in [`GTable::fibers`] order; `None` outside the support
/// and, on the lower side, where the target lies below the whole fiber.
pub fn fiber_estimates<T: Scalar>(g: &GTable<T>, interpolate: bool) -> Vec<Vec<Option<T>>> {
    let y = g.grid.y();
    let floor = g.lower_support_bound.min(y[0]);
    g.fibers
        .iter()
        .map(|f| {
            (0..y.len())
                .map(|iy| {
                    if !g.supported.get(iy, f.iz) {
                        return None;
                    }
                    if f.iz == f.jz && g.side == BandSide::Lower {
                        // G(·|z,z) = F1(·|z), whose generalized inverse at F1(y|z) is y itself
                        return Some(y[iy]);
                    }
                    let target = g.f1.get(iy, f.iz);
                    if g.side == BandSide::Lower && target < f.monotone[0] {
                        // censored at the grid floor; dropping the inequality only lowers the band
                        return None;
                    }
                    invert_fiber(y, &f.monotone, target, g.side, floor, interpolate)
                })
                .collect()
        })
        .collect()
}

/// Bootstrap standard errors and draws of `θ̂`, both indexed like [`fiber_estimates`].
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapDraws<T> {
    pub se: Vec<Vec<T>>,
    /// `[replication][fiber][iy]`
    pub draws: Vec<Vec<Vec<Option<T>>>>,
}

fn resample_indices<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Pairs bootstrap of `θ̂` with replication `b` drawn from its own stream under `seed`.
///
/// ε is held at `gtable.epsilon` in every replication.
pub fn bootstrap_errors<T: Scalar>(
    sample: &ObservationSample<T>,
    gtable: &GTable<T>,
    h: T,
    replications: usize,
    seed: u64,
    interpolate: bool,
) -> Result<BootstrapDraws<T>> {
    if replications < MIN_BOOTSTRAP {
        return Err(Error::Config(format!(
            "at least {MIN_BOOTSTRAP} bootstrap replications are required, got {replications}"
        )));
    }
    let n = sample.len();
    let draws: Vec<Vec<Vec<Option<T>>>> = (0..replications)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, streams::BOOTSTRAP_BASE + b as u64);
            let boot = sample.resample(&resample_indices(n, &mut rng));
            let table = estimate_tables(&boot, &gtable.grid, h)?;
            let id_tol = T::lit(estimated_id_tol(n));
            let g = g_table_from_tables(
                &table,
                gtable.side,
                gtable.lower_support_bound,
                Some(gtable.epsilon),
                id_tol,
            )?;
            Ok(fiber_estimates(&g, interpolate))
        })
        .collect::<Result<_>>()?;
    let floor = T::lit(SE_FLOOR);
    let ny = gtable.grid.ny();
    let se = (0..gtable.fibers.len())
        .map(|k| {
            (0..ny)
                .map(|iy| {
                    let vals: Vec<f64> = draws
                        .iter()
                        .filter_map(|d| d[k][iy])
                        .map(|v| v.as_f64())
                        .collect();
                    if vals.len() < 2 {
                        return floor;
                    }
                    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                        / (vals.len() - 1) as f64;
                    T::lit(var.sqrt()).max(floor)
                })
                .collect()
        })
        .collect();
    Ok(BootstrapDraws { se, draws })
}

/// Grid indices nearest to the empirical deciles of the observed incomes.
pub fn decile_subset<T: Scalar>(sample: &ObservationSample<T>, y_grid: &[T]) -> Vec<usize> {
    let mut ys = sample.y().to_vec();
    ys.sort_by(|a, b| a.partial_cmp(b).expect("finite incomes"));
    let targets: Vec<T> = (1..10)
        .map(|k| empirical_quantile_sorted(&ys, k as f64 / 10.0))
        .collect();
    nearest_indices(y_grid, &targets)
}

/// Nearest grid index for each value, sorted and without duplicates.
pub fn nearest_indices<T: Scalar>(y_grid: &[T], values: &[T]) -> Vec<usize> {
    let mut out: Vec<usize> = values
        .iter()
        .map(|&v| {
            (0..y_grid.len())
                .min_by(|&a, &b| {
                    (y_grid[a] - v)
                        .abs()
                        .partial_cmp(&(y_grid[b] - v).abs())
                        .expect("finite grid")
                })
                .expect("non-empty grid")
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Level of the preliminary quantile used for inequality selection, `1 − 0.1/ln n`, never
/// below `1 − α`.
pub fn selection_level(n: usize, alpha: f64) -> f64 {
    let ln = (n.max(3) as f64).ln();
    (1.0 - 0.1 / ln).max(1.0 - alpha)
}

/// Band configuration echoed into every artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandConfig {
    pub alpha: f64,
    pub bootstrap: usize,
    pub seed: u64,
    pub side: BandSide,
    /// Linear interpolation inside the fiber inverses.
    pub interpolate: bool,
}

impl Default for BandConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            bootstrap: 200,
            seed: 0,
            side: BandSide::Lower,
            interpolate: true,
        }
    }
}

impl BandConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 0.5) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 0.5], got {}",
                self.alpha
            )));
        }
        if self.bootstrap < MIN_BOOTSTRAP {
            return Err(Error::Config(format!(
                "at least {MIN_BOOTSTRAP} bootstrap replications are required, got {}",
                self.bootstrap
            )));
        }
        Ok(())
    }
}

/// A selected inequality `(y, z, z̃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectedCell {
    pub y: f64,
    pub z: f64,
    pub z_tilde: f64,
}

/// One-sided uniform confidence band on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct ConfidenceBand<T> {
    pub grid: EvaluationGrid<T>,
    pub side: BandSide,
    /// `Cₙ(y, z)`; `None` where the bound is unidentified.
    pub cn: GridMatrix<Option<T>>,
    /// Point estimate `y − min_{z̃} θ̂` (lower) or `y − max_{z̃} θ̂` (upper).
    pub estimate: GridMatrix<Option<T>>,
    /// Standard error of the fiber attaining the inflated extremum.
    pub se: GridMatrix<Option<T>>,
    pub critical_value: T,
    pub preliminary_critical_value: T,
    pub alpha: f64,
    pub bootstrap: usize,
    pub seed: u64,
    pub bandwidth: Option<T>,
    pub epsilon: T,
    pub subset: Vec<T>,
    pub selected: Vec<SelectedCell>,
}

fn studentized<T: Scalar>(side: BandSide, estimate: T, draw: T, se: T) -> f64 {
    match side {
        BandSide::Lower => ((estimate - draw) / se).as_f64(),
        BandSide::Upper => ((draw - estimate) / se).as_f64(),
    }
}

/// `(1 − level)`-upper quantile of the per-replication maximum of the studentized deviations
/// over `cells`, clipped at zero.
fn max_quantile<T: Scalar>(
    side: BandSide,
    estimates: &[Vec<Option<T>>],
    boot: &BootstrapDraws<T>,
    cells: &[(usize, usize)],
    level: f64,
) -> f64 {
    let mut maxima: Vec<f64> = boot
        .draws
        .iter()
        .map(|draw| {
            cells
                .iter()
                .filter_map(|&(k, iy)| {
                    let (e, d) = (estimates[k][iy]?, draw[k][iy]?);
                    Some(studentized(side, e, d, boot.se[k][iy]))
                })
                .fold(0.0, f64::max)
        })
        .collect();
    maxima.sort_by(f64::total_cmp);
    empirical_quantile_sorted(&maxima, level).max(0.0)
}

/// Critical values with adaptive inequality selection and the assembled band.
///
/// `subset` holds the income-grid indices entering the critical value; `n` is the sample size
/// behind the preliminary selection level.
pub fn clr_band<T: Scalar>(
    gtable: &GTable<T>,
    estimates: &[Vec<Option<T>>],
    boot: &BootstrapDraws<T>,
    config: &BandConfig,
    subset: &[usize],
    n: usize,
) -> Result<ConfidenceBand<T>> {
    if !(config.alpha > 0.0 && config.alpha <= 0.5) {
        return Err(Error::Config(format!(
            "alpha must lie in (0, 0.5], got {}",
            config.alpha
        )));
    }
    if subset.is_empty() {
        return Err(Error::Config(
            "the inequality selection subset is empty".into(),
        ));
    }
    let side = config.side;
    let (y, z) = (gtable.grid.y(), gtable.grid.z());
    let (ny, nz) = (gtable.grid.ny(), gtable.grid.nz());
    if let Some(&bad) = subset.iter().find(|&&iy| iy >= ny) {
        return Err(Error::Config(format!(
            "subset index {bad} is outside the income grid"
        )));
    }
    let by_z: Vec<Vec<usize>> = (0..nz)
        .map(|iz| {
            (0..gtable.fibers.len())
                .filter(|&k| gtable.fibers[k].iz == iz)
                .collect()
        })
        .collect();
    let all: Vec<(usize, usize)> = subset
        .iter()
        .flat_map(|&iy| (0..gtable.fibers.len()).map(move |k| (k, iy)))
        .collect();
    let kp = max_quantile(
        side,
        estimates,
        boot,
        &all,
        selection_level(n, config.alpha),
    );
    let kp_t = T::lit(kp);
    let mut kept = Vec::new();
    for &iy in subset {
        for fibers in &by_z {
            let live: Vec<(usize, T, T)> = fibers
                .iter()
                .filter_map(|&k| estimates[k][iy].map(|e| (k, e, boot.se[k][iy])))
                .collect();
            match side {
                BandSide::Lower => {
                    let m = live
                        .iter()
                        .map(|&(_, e, s)| e + kp_t * s)
                        .fold(T::infinity(), T::min);
                    kept.extend(
                        live.iter()
                            .filter(|&&(_, e, s)| e <= m + kp_t * s * T::lit(2.0))
                            .map(|&(k, _, _)| (k, iy)),
                    );
                }
                BandSide::Upper => {
                    let m = live
                        .iter()
                        .map(|&(_, e, s)| e - kp_t * s)
                        .fold(T::neg_infinity(), T::max);
                    kept.extend(
                        live.iter()
                            .filter(|&&(_, e, s)| e >= m - kp_t * s * T::lit(2.0))
                            .map(|&(k, _, _)| (k, iy)),
                    );
                }
            }
        }
    }
    let k = max_quantile(side, estimates, boot, &kept, 1.0 - config.alpha);
    let k_t = T::lit(k);
    let mut cn = GridMatrix::filled(ny, nz, None);
    let mut est = GridMatrix::filled(ny, nz, None);
    let mut se = GridMatrix::filled(ny, nz, None);
    for (iz, fibers) in by_z.iter().enumerate() {
        for iy in 0..ny {
            let cells = fibers
                .iter()
                .map(|&k| estimates[k][iy].map(|e| (e, boot.se[k][iy])));
            // a lower fiber may drop out; an upper fiber that never reaches the target leaves
            // the bound unidentified
            let live: Vec<(T, T)> = match side {
                BandSide::Lower => cells.flatten().collect(),
                BandSide::Upper => cells.collect::<Option<_>>().unwrap_or_default(),
            };
            if live.is_empty() {
                continue;
            }
            match side {
                BandSide::Lower => {
                    let point = live.iter().map(|p| p.0).fold(T::infinity(), T::min);
                    let (inflated, s) = live.iter().map(|&(e, s)| (e + k_t * s, s)).fold(
                        (T::infinity(), T::zero()),
                        |a, b| if b.0 < a.0 { b } else { a },
                    );
                    est.set(iy, iz, Some((y[iy] - point).max(T::zero())));
                    cn.set(iy, iz, Some((y[iy] - inflated).max(T::zero())));
                    se.set(iy, iz, Some(s));
                }
                BandSide::Upper => {
                    let point = live.iter().map(|p| p.0).fold(T::neg_infinity(), T::max);
                    let (deflated, s) = live.iter().map(|&(e, s)| (e - k_t * s, s)).fold(
                        (T::neg_infinity(), T::zero()),
                        |a, b| if b.0 > a.0 { b } else { a },
                    );
                    est.set(iy, iz, Some(y[iy] - point));
                    cn.set(iy, iz, Some(y[iy] - deflated));
                    se.set(iy, iz, Some(s));
                }
            }
        }
    }
    let selected = kept
        .iter()
        .map(|&(k, iy)| {
            let f = &gtable.fibers[k];
            SelectedCell {
                y: y[iy].as_f64(),
                z: z[f.iz].as_f64(),
                z_tilde: z[f.jz].as_f64(),
            }
        })
        .collect();
    Ok(ConfidenceBand {
        grid: gtable.grid.clone(),
        side,
        cn,
        estimate: est,
        se,
        critical_value: k_t,
        preliminary_critical_value: kp_t,
        alpha: config.alpha,
        bootstrap: boot.draws.len(),
        seed: config.seed,
        bandwidth: gtable.bandwidth,
        epsilon: gtable.epsilon,
        subset: subset.iter().map(|&iy| y[iy]).collect(),
        selected,
    })
}

/// Full procedure from a sample: fibers, bootstrap, critical values, band.
///
/// `subset = None` uses the empirical deciles of `Y`; `epsilon = None` the default scale.
pub fn confidence_band<T: Scalar>(
    sample: &ObservationSample<T>,
    grid: &EvaluationGrid<T>,
    h: T,
    epsilon: Option<T>,
    subset: Option<&[T]>,
    config: &BandConfig,
) -> Result<ConfidenceBand<T>> {
    config.validate()?;
    let g = build_g_table_side(sample, grid, h, epsilon, config.side)?;
    let estimates = fiber_estimates(&g, config.interpolate);
    let boot = bootstrap_errors(
        sample,
        &g,
        h,
        config.bootstrap,
        config.seed,
        config.interpolate,
    )?;
    let subset = match subset {
        Some(values) => nearest_indices(grid.y(), values),
        None => decile_subset(sample, grid.y()),
    };
    clr_band(&g, &estimates, &boot, config, &subset, sample.len())
}

/// Bootstrap test of `F̲ ≤ F̄` on the estimated envelopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingInference {
    /// `T = max (F̲ − F̄)` over the grid.
    pub statistic: f64,
    /// `(1 − α)` quantile of `max [(F̲* − F̄*) − (F̲ − F̄)]`.
    pub critical_value: f64,
    pub rejected: bool,
    pub alpha: f64,
    pub bootstrap: usize,
}

fn envelope_gaps<T: Scalar>(table: &ConditionalCdfTable<T>, b: T) -> Vec<f64> {
    let env = envelopes(table, b);
    env.flow
        .values()
        .iter()
        .zip(env.fhigh.values())
        .map(|(l, u)| (*l - *u).as_f64())
        .collect()
}

pub fn crossing_inference<T: Scalar>(
    sample: &ObservationSample<T>,
    grid: &EvaluationGrid<T>,
    h: T,
    alpha: f64,
    replications: usize,
    seed: u64,
) -> Result<CrossingInference> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::Config(format!(
            "alpha must lie in (0, 0.5], got {alpha}"
        )));
    }
    if replications < MIN_BOOTSTRAP {
        return Err(Error::Config(format!(
            "at least {MIN_BOOTSTRAP} bootstrap replications are required, got {replications}"
        )));
    }
    let b = sample.lower_support_bound();
    let table = estimate_tables(sample, grid, h)?;
    let base = envelope_gaps(&table, b);
    let statistic = base.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = sample.len();
    let mut maxima: Vec<f64> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, streams::CROSSING_BASE + r as u64);
            let boot = sample.resample(&resample_indices(n, &mut rng));
            let t = estimate_tables(&boot, grid, h)?;
            Ok(envelope_gaps(&t, b)
                .iter()
                .zip(&base)
                .map(|(g, g0)| g - g0)
                .fold(f64::NEG_INFINITY, f64::max))
        })
        .collect::<Result<_>>()?;
    maxima.sort_by(f64::total_cmp);
    let critical_value = empirical_quantile_sorted(&maxima, 1.0 - alpha).max(0.0);
    Ok(CrossingInference {
        statistic,
        critical_value,
        rejected: statistic > critical_value,
        alpha,
        bootstrap: replications,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelopes::{generalized_inverse, InverseKind};
    use crate::grid::linspace;

    #[test]
    fn monotonize_examples() {
        let out = monotonize_eps(&[0.2f64, 0.1, 0.3], 0.001);
        assert_eq!(out[0], 0.2);
        assert!((out[1] - 0.201).abs() < 1e-15);
        assert_eq!(out[2], 0.3);
        let c = 0.4f64;
        let out = monotonize_eps(&[c, c, c], 0.001);
        assert!((out[1] - (c + 0.001)).abs() < 1e-15);
        assert!((out[2] - (c + 0.002)).abs() < 1e-15);
        let inc = [0.1, 0.3, 0.6];
        assert_eq!(monotonize_eps(&inc, 0.01), inc.to_vec());
    }

    #[test]
    fn fiber_inverse_matches_generalized_inverse() {
        let y = linspace(0.0f64, 1.0, 11);
        let col: Vec<f64> = y.iter().map(|v| if *v < 0.5 { 0.0 } else { 0.6 }).collect();
        let fiber = monotonize_eps(&col, 0.0);
        for x in [0.3, 0.7, -0.1] {
            let a = invert_fiber(&y, &fiber, x, BandSide::Lower, 0.0, false).unwrap();
            let b = generalized_inverse(&y, &col, x, InverseKind::Lower, false).unwrap();
            assert_eq!(a, b);
        }
        assert_eq!(
            invert_fiber(&y, &fiber, 0.3, BandSide::Lower, 0.0, false),
            Some(0.5)
        );
        assert_eq!(
            invert_fiber(&y, &fiber, -0.1, BandSide::Lower, 0.0, false),
            Some(0.0)
        );
    }

    #[test]
    fn selection_level_is_at_least_confidence() {
        assert!((selection_level(2000, 0.05) - (1.0 - 0.1 / 2000f64.ln())).abs() < 1e-15);
        assert_eq!(selection_level(5, 0.5), 1.0 - 0.1 / 5f64.ln());
        assert!(selection_level(3, 0.05) >= 0.95);
    }

    #[test]
    fn band_config_ranges() {
        assert!(BandConfig::default().validate().is_ok());
        let bad = BandConfig {
            alpha: 0.6,
            ..BandConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let few = BandConfig {
            bootstrap: 10,
            ..BandConfig::default()
        };
        assert!(matches!(few.validate(), Err(Error::Config(_))));
    }
}
