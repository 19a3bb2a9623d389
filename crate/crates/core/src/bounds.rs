//! Sharp bounds on the cost function: pointwise bounds under perfect foresight, per-instrument
//! bounds under imperfect foresight and bounds on the distribution of a random cost.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envelopes::{
    crossing_test, envelopes, lower_inverse, running_max, sandwich, upper_inverse, CrossingReport,
    EnvelopeTable, SandwichTable, POPULATION_CROSSING_TOL,
};
use crate::error::{Error, Result};
use crate::grid::{EvaluationGrid, GridMatrix};
use crate::kernel::{conditional_means, ConditionalCdfTable};
use crate::model::{check_z_monotone, ObservationSample};
use crate::scalar::Scalar;

/// Identification tolerance on `F1` and `p` for population tables.
pub const POPULATION_ID_TOL: f64 = 1e-6;

/// Identification tolerance on `F1` and `p` for tables estimated from `n` records.
pub fn estimated_id_tol(n: usize) -> f64 {
    (5.0 / n.max(1) as f64).max(1e-3)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundOptions {
    pub lower_support_bound: f64,
    pub id_tol: f64,
    pub crossing_tol: f64,
    /// Linear interpolation inside the generalized inverses; off keeps the bounds exact on
    /// population grids.
    pub interpolate: bool,
}

impl BoundOptions {
    pub fn population(lower_support_bound: f64) -> Self {
        Self {
            lower_support_bound,
            id_tol: POPULATION_ID_TOL,
            crossing_tol: POPULATION_CROSSING_TOL,
            interpolate: false,
        }
    }

    pub fn estimated(n: usize, lower_support_bound: f64) -> Self {
        Self {
            id_tol: estimated_id_tol(n),
            ..Self::population(lower_support_bound)
        }
    }
}

/// `C̲(y, z)` and `C̄(y, z)` on the grid; `None` marks unidentified cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct BoundSurface<T> {
    pub grid: EvaluationGrid<T>,
    pub clow: GridMatrix<Option<T>>,
    pub chigh: GridMatrix<Option<T>>,
    /// `false` where `F1(y|z)` is below the identification tolerance.
    pub identified: GridMatrix<bool>,
    pub rejected: bool,
    pub crossing: CrossingReport,
}

impl<T: Scalar> BoundSurface<T> {
    /// Largest identified lower bound (`None` if nothing is identified).
    pub fn max_lower(&self) -> Option<T> {
        self.clow.values().iter().flatten().copied().reduce(T::max)
    }
}

/// Intermediate objects of the perfect-foresight bounds.
#[derive(Debug, Clone)]
pub struct PfBounds<T> {
    pub envelopes: EnvelopeTable<T>,
    pub sandwich: SandwichTable<T>,
    pub surface: BoundSurface<T>,
}

/// `C̲(y,z) = y − L₋(F1(y|z)|z)` (clipped at 0) and `C̄(y,z) = y − U⁻(F1(y|z)|z)`.
pub fn cost_bounds_pf<T: Scalar>(
    table: &ConditionalCdfTable<T>,
    options: &BoundOptions,
) -> BoundSurface<T> {
    cost_bounds_pf_detailed(table, options).surface
}

pub fn cost_bounds_pf_detailed<T: Scalar>(
    table: &ConditionalCdfTable<T>,
    options: &BoundOptions,
) -> PfBounds<T> {
    let b = T::lit(options.lower_support_bound);
    let env = envelopes(table, b);
    let sw = sandwich(table, &env);
    let crossing = crossing_test(&env, T::lit(options.crossing_tol));
    let y = table.grid.y();
    let (ny, nz) = (table.ny(), table.nz());
    let floor = b.min(y[0]);
    let tol = T::lit(options.id_tol);
    let identified = GridMatrix::from_fn(ny, nz, |iy, iz| table.f1.get(iy, iz) >= tol);
    let mut clow = GridMatrix::filled(ny, nz, None);
    let mut chigh = GridMatrix::filled(ny, nz, None);
    for iz in 0..nz {
        let (l, u) = (sw.l.col(iz), sw.u.col(iz));
        for iy in 0..ny {
            if !identified.get(iy, iz) {
                continue;
            }
            let x = table.f1.get(iy, iz);
            let lo = y[iy] - lower_inverse(y, l, x, options.interpolate);
            clow.set(iy, iz, Some(lo.max(T::zero())));
            let hi = upper_inverse(y, u, x, floor, options.interpolate).map(|v| y[iy] - v);
            chigh.set(iy, iz, hi);
        }
    }
    let surface = BoundSurface {
        grid: table.grid.clone(),
        clow,
        chigh,
        identified,
        rejected: crossing.rejected,
        crossing,
    };
    PfBounds {
        envelopes: env,
        sandwich: sw,
        surface,
    }
}

/// Per-instrument cost bounds under imperfect foresight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct IfBoundCurve<T> {
    pub z: Vec<T>,
    pub clow: Vec<T>,
    /// `+∞` where `p(z)` is zero.
    pub chigh: Vec<T>,
    /// `E[Y | Z = z]`
    pub m: Vec<T>,
    /// `E[Y(1 − D) + b̲D | Z = z]`
    pub m0b: Vec<T>,
    pub p: Vec<T>,
    pub p_tol: T,
}

/// `C̲(z) = (m(z) − min_{z̃≥z} m(z̃)) / p(z)` and `C̄(z) = (m(z) − max_{z̃≤z} m0b(z̃)) / p(z)`.
pub fn if_bounds_from_moments<T: Scalar>(
    z: &[T],
    m: &[T],
    m0b: &[T],
    p: &[T],
    p_tol: T,
) -> Result<IfBoundCurve<T>> {
    let n = z.len();
    if n == 0 || m.len() != n || m0b.len() != n || p.len() != n {
        return Err(Error::Domain(
            "moment vectors must match a non-empty instrument grid".into(),
        ));
    }
    let mut min_above = m.to_vec();
    for i in (0..n.saturating_sub(1)).rev() {
        min_above[i] = min_above[i].min(min_above[i + 1]);
    }
    let max_below = running_max(m0b);
    let identified = |i: usize| p[i] > p_tol;
    let clow = (0..n)
        .map(|i| {
            if identified(i) {
                ((m[i] - min_above[i]) / p[i]).max(T::zero())
            } else {
                T::zero()
            }
        })
        .collect();
    let chigh = (0..n)
        .map(|i| {
            if identified(i) {
                (m[i] - max_below[i]) / p[i]
            } else {
                T::infinity()
            }
        })
        .collect();
    Ok(IfBoundCurve {
        z: z.to_vec(),
        clow,
        chigh,
        m: m.to_vec(),
        m0b: m0b.to_vec(),
        p: p.to_vec(),
        p_tol,
    })
}

/// Estimates the conditional moments by local linear regression and applies the closed form.
pub fn cost_bounds_if<T: Scalar>(
    sample: &ObservationSample<T>,
    z_grid: &[T],
    h: T,
) -> Result<IfBoundCurve<T>> {
    let b = sample.lower_support_bound();
    let y = sample.y().to_vec();
    let d: Vec<T> = sample
        .d()
        .iter()
        .map(|&d| if d { T::one() } else { T::zero() })
        .collect();
    let y0b: Vec<T> = sample
        .records()
        .map(|r| if r.d { b } else { r.y })
        .collect();
    let m = conditional_means(sample, &y, z_grid, h)?;
    let m0b = conditional_means(sample, &y0b, z_grid, h)?;
    let p: Vec<T> = conditional_means(sample, &d, z_grid, h)?
        .into_iter()
        .map(|v| v.max(T::zero()).min(T::one()))
        .collect();
    if_bounds_from_moments(z_grid, &m, &m0b, &p, T::lit(estimated_id_tol(sample.len())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestabilityReport {
    pub rejected: bool,
    /// Offending `(z, z̃)` pairs with `z > z̃`, `p(z) = p(z̃) = 0` and `m(z) < m(z̃)`.
    pub violations: Vec<(f64, f64)>,
}

/// Where nobody picks sector 1 the conditional mean is that of `Y0` and must not decrease.
pub fn testability_if<T: Scalar>(curve: &IfBoundCurve<T>, tol: T) -> TestabilityReport {
    let n = curve.z.len();
    let zero = |i: usize| curve.p[i] <= tol;
    let mut violations = Vec::new();
    for i in 0..n {
        for j in 0..i {
            if zero(i) && zero(j) && curve.m[i] < curve.m[j] - tol {
                violations.push((curve.z[i].as_f64(), curve.z[j].as_f64()));
            }
        }
    }
    TestabilityReport {
        rejected: !violations.is_empty(),
        violations,
    }
}

/// Bounds on `P(C ≤ c | Z = z, D = 1)` for a random cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct RandomCostCdfBounds<T> {
    pub cost_grid: Vec<T>,
    pub z: Vec<T>,
    pub y: Vec<T>,
    /// `F_L(c|z,1)`, entry `(ic, iz)`; `None` in columns with `p(z)` at or below tolerance.
    pub fl: GridMatrix<Option<T>>,
    pub fu: GridMatrix<Option<T>>,
    /// `F̲(y|z,1)` and `F̄(y|z,1)` over the income grid.
    pub flow1: GridMatrix<Option<T>>,
    pub fhigh1: GridMatrix<Option<T>>,
}

/// Right-continuous step evaluation of a tabulated CDF; zero below the grid.
fn step_eval<T: Scalar>(y: &[T], values: &[T], t: T) -> T {
    let k = y.partition_point(|v| *v <= t);
    if k == 0 {
        T::zero()
    } else {
        values[k - 1]
    }
}

fn conditional_on_treated<T: Scalar>(bound: &[T], f: &[T], f1: &[T], p: T) -> Vec<T> {
    let raw: Vec<T> = bound
        .iter()
        .zip(f)
        .zip(f1)
        .map(|((b, f), f1)| ((*b - *f + *f1) / p).max(T::zero()).min(T::one()))
        .collect();
    running_max(&raw)
}

/// Makarov-type bounds for the distribution of `Y1 − g(Y1)` among sector-1 choosers.
pub fn random_cost_bounds<T: Scalar>(
    table: &ConditionalCdfTable<T>,
    envelopes: &EnvelopeTable<T>,
    cost_grid: &[T],
    p_tol: T,
) -> Result<RandomCostCdfBounds<T>> {
    if cost_grid.is_empty() || cost_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(
            "cost grid must be non-empty and increasing".into(),
        ));
    }
    let y = table.grid.y();
    let (ny, nz, nc) = (table.ny(), table.nz(), cost_grid.len());
    struct Col<T> {
        fl: Vec<Option<T>>,
        fu: Vec<Option<T>>,
        lo1: Vec<Option<T>>,
        hi1: Vec<Option<T>>,
    }
    let cols: Vec<Col<T>> = (0..nz)
        .into_par_iter()
        .map(|iz| {
            let p = table.p[iz];
            if !(p > p_tol) {
                return Col {
                    fl: vec![None; nc],
                    fu: vec![None; nc],
                    lo1: vec![None; ny],
                    hi1: vec![None; ny],
                };
            }
            let f = table.f.col(iz);
            let f1 = table.f1.col(iz);
            let a: Vec<T> = running_max(
                &f1.iter()
                    .map(|v| (*v / p).min(T::one()))
                    .collect::<Vec<_>>(),
            );
            let lo1 = conditional_on_treated(envelopes.flow.col(iz), f, f1, p);
            let hi1 = conditional_on_treated(envelopes.fhigh.col(iz), f, f1, p);
            let mut fl = Vec::with_capacity(nc);
            let mut fu = Vec::with_capacity(nc);
            for &c in cost_grid {
                let mut sup = T::zero();
                let mut inf = T::zero();
                for t in y.iter().flat_map(|&v| [v, v + c]) {
                    let at = step_eval(y, &a, t);
                    sup = sup.max(at - step_eval(y, &hi1, t - c));
                    inf = inf.min(at - step_eval(y, &lo1, t - c));
                }
                fl.push(sup);
                fu.push(T::one() + inf);
            }
            Col {
                fl: running_max(&fl).into_iter().map(Some).collect(),
                fu: running_max(&fu).into_iter().map(Some).collect(),
                lo1: lo1.into_iter().map(Some).collect(),
                hi1: hi1.into_iter().map(Some).collect(),
            }
        })
        .collect();
    let mut fl = Vec::with_capacity(nz);
    let mut fu = Vec::with_capacity(nz);
    let mut lo1 = Vec::with_capacity(nz);
    let mut hi1 = Vec::with_capacity(nz);
    for c in cols {
        fl.push(c.fl);
        fu.push(c.fu);
        lo1.push(c.lo1);
        hi1.push(c.hi1);
    }
    Ok(RandomCostCdfBounds {
        cost_grid: cost_grid.to_vec(),
        z: table.grid.z().to_vec(),
        y: y.to_vec(),
        fl: GridMatrix::from_columns(fl),
        fu: GridMatrix::from_columns(fu),
        flow1: GridMatrix::from_columns(lo1),
        fhigh1: GridMatrix::from_columns(hi1),
    })
}

/// Diagnostics for the model that attains the lower bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub grid_spacing: f64,
    /// `max |g⁻¹(g(y)) − y|` over identified cells, with `g(y) = y − C̲(y, z)`.
    pub reconstruction_error: f64,
    /// Whether `g` is non-decreasing along every column.
    pub monotone_map: bool,
    /// Worst increase in `z` of `P(Y − D·C̲ ≤ t | z)`.
    pub smiv_violation: f64,
    /// Largest rise of `F̲` over two grid steps, the tolerance for `smiv_violation`.
    pub smiv_tolerance: f64,
    /// `max |P(Y − D·C̲ ≤ t | z) − F̲(t|z)|`.
    pub envelope_gap: f64,
    pub passes: bool,
}

/// Re-simulates the observables of the model with cost `C̲`, `Y0 = Y − D·C̲`,
/// `Y1 = g⁻¹(Y − D·C̲)`, at the table level.
pub fn sharpness_check<T: Scalar>(
    table: &ConditionalCdfTable<T>,
    surface: &BoundSurface<T>,
    envelopes: &EnvelopeTable<T>,
) -> SharpnessReport {
    let y: Vec<f64> = table.grid.y().iter().map(|v| v.as_f64()).collect();
    let (ny, nz) = (table.ny(), table.nz());
    let spacing = table.grid.max_y_spacing().as_f64();
    let mut reconstruction: f64 = 0.0;
    let mut monotone = true;
    let mut net = GridMatrix::filled(ny, nz, 0.0);
    let mut smiv_tolerance: f64 = 0.0;
    for iz in 0..nz {
        let g: Vec<f64> = (0..ny)
            .map(|iy| y[iy] - surface.clow.get(iy, iz).map_or(0.0, |c| c.as_f64()))
            .collect();
        monotone &= g.windows(2).all(|w| w[1] >= w[0] - 1e-12);
        let floor_l = envelopes.flow.get(0, iz).as_f64() - table.f0.get(0, iz).as_f64();
        for iy in 0..ny {
            // g⁻¹(t) as the largest grid income whose net value is at most t
            let back = |t: f64| g.iter().rposition(|v| *v <= t);
            // skip rows without treated mass and rows whose inverse is censored at the grid floor
            let f1 = table.f1.get(iy, iz).as_f64();
            let mass = f1
                - if iy > 0 {
                    table.f1.get(iy - 1, iz).as_f64()
                } else {
                    0.0
                };
            if surface.identified.get(iy, iz) && mass > POPULATION_ID_TOL && f1 > floor_l {
                let k = back(g[iy]).unwrap_or(0);
                reconstruction = reconstruction.max((y[k] - y[iy]).abs());
            }
            let f1_back = back(y[iy]).map_or(0.0, |k| table.f1.get(k, iz).as_f64());
            net.set(iy, iz, table.f0.get(iy, iz).as_f64() + f1_back);
        }
        let flow = envelopes.flow.col(iz);
        for iy in 0..ny {
            let up = flow[(iy + 2).min(ny - 1)].as_f64() - flow[iy].as_f64();
            smiv_tolerance = smiv_tolerance.max(up);
        }
    }
    let (smiv_violation, _) = check_z_monotone(&net);
    let envelope_gap = net
        .values()
        .iter()
        .zip(envelopes.flow.values())
        .map(|(a, b)| (a - b.as_f64()).abs())
        .fold(0.0, f64::max);
    SharpnessReport {
        grid_spacing: spacing,
        reconstruction_error: reconstruction,
        monotone_map: monotone,
        smiv_violation,
        smiv_tolerance,
        envelope_gap,
        passes: monotone
            && reconstruction <= 2.0 * spacing
            && smiv_violation <= smiv_tolerance + 1e-12,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::linspace;

    #[test]
    fn if_bounds_direct_evaluation() {
        let z = [0.1, 0.2, 0.3];
        let c = if_bounds_from_moments(&z, &[10.0, 8.0, 9.0], &[4.0, 4.0, 4.5], &[0.5; 3], 1e-9)
            .unwrap();
        assert_eq!(c.clow, vec![4.0, 0.0, 0.0]);
        assert_eq!(c.chigh[1], 8.0);
    }

    #[test]
    fn if_bounds_zero_propensity_conventions() {
        let c = if_bounds_from_moments(&[0.1, 0.2], &[5.0, 3.0], &[5.0, 3.0], &[0.0, 0.4], 1e-9)
            .unwrap();
        assert_eq!(c.clow[0], 0.0);
        assert_eq!(c.chigh[0], f64::INFINITY);
        assert!(c.chigh[1].is_finite());
    }

    #[test]
    fn increasing_means_give_zero_lower_bound() {
        let m: Vec<f64> = (0..6).map(|i| 1.0 + i as f64).collect();
        let c = if_bounds_from_moments(&linspace(0.0, 1.0, 6), &m, &m, &[0.3; 6], 1e-9).unwrap();
        assert!(c.clow.iter().all(|v| *v == 0.0));
    }

    fn curve(m: Vec<f64>, p: Vec<f64>) -> IfBoundCurve<f64> {
        let z = linspace(0.1, 0.1 * m.len() as f64, m.len());
        if_bounds_from_moments(&z, &m, &m, &p, 1e-9).unwrap()
    }

    #[test]
    fn testability() {
        assert!(!testability_if(&curve(vec![7.0, 5.0], vec![0.2, 0.3]), 1e-9).rejected);
        let r = testability_if(&curve(vec![7.0, 5.0], vec![0.0, 0.0]), 1e-9);
        assert!(r.rejected);
        assert_eq!(r.violations.len(), 1);
        assert!(!testability_if(&curve(vec![5.0, 5.0], vec![0.0, 0.0]), 1e-9).rejected);
        assert!(!testability_if(&curve(vec![5.0, 7.0], vec![0.0, 0.0]), 1e-9).rejected);
    }

    fn point_mass_table(c_true: f64) -> (ConditionalCdfTable<f64>, EnvelopeTable<f64>) {
        let y = linspace(0.0, 4.0, 41);
        let f1: Vec<f64> = y
            .iter()
            .map(|v| if *v >= 2.0 { 1.0 } else { 0.0 })
            .collect();
        let table = ConditionalCdfTable::from_parts(
            EvaluationGrid::new(y.clone(), vec![0.5]).unwrap(),
            GridMatrix::from_columns(vec![vec![0.0; y.len()]]),
            GridMatrix::from_columns(vec![f1.clone()]),
            vec![1.0],
            None,
        )
        .unwrap();
        let lo: Vec<f64> = y
            .iter()
            .map(|v| if *v >= 2.0 - c_true { 1.0 } else { 0.0 })
            .collect();
        let env = EnvelopeTable {
            grid: table.grid.clone(),
            flow: GridMatrix::from_columns(vec![lo]),
            fhigh: GridMatrix::from_columns(vec![f1]),
        };
        (table, env)
    }

    #[test]
    fn makarov_point_masses_recover_deterministic_cost() {
        let (table, env) = point_mass_table(1.0);
        let costs = linspace(0.0, 2.0, 21);
        let r = random_cost_bounds(&table, &env, &costs, 1e-9).unwrap();
        for (ic, &c) in costs.iter().enumerate() {
            let fu = r.fu.get(ic, 0).unwrap();
            let expected = if c >= 1.0 - 1e-12 { 1.0 } else { 0.0 };
            assert_eq!(fu, expected, "c={c}");
        }
    }

    #[test]
    fn makarov_without_violation_admits_zero_cost() {
        let y = linspace(0.0f64, 3.0, 31);
        let f1: Vec<f64> = y.iter().map(|v| (v / 3.0).min(1.0)).collect();
        let table = ConditionalCdfTable::from_parts(
            EvaluationGrid::new(y.clone(), vec![0.5]).unwrap(),
            GridMatrix::from_columns(vec![vec![0.0; y.len()]]),
            GridMatrix::from_columns(vec![f1.clone()]),
            vec![1.0],
            None,
        )
        .unwrap();
        let env = EnvelopeTable {
            grid: table.grid.clone(),
            flow: GridMatrix::from_columns(vec![f1.clone()]),
            fhigh: GridMatrix::from_columns(vec![f1]),
        };
        let r = random_cost_bounds(&table, &env, &linspace(0.0, 1.0, 5), 1e-9).unwrap();
        for ic in 0..5 {
            assert_eq!(r.fu.get(ic, 0), Some(1.0));
            assert!(r.fl.get(ic, 0).unwrap() <= 1.0);
        }
    }

    #[test]
    fn unidentified_makarov_column() {
        let (mut table, env) = point_mass_table(1.0);
        table.p[0] = 0.0;
        let r = random_cost_bounds(&table, &env, &[0.0, 1.0], 1e-9).unwrap();
        assert!(r.fl.values().iter().all(|v| v.is_none()));
    }
}
