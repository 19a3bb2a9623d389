//! Monotone envelopes of the conditional distribution of `Y − D·C(Y, Z)`, the sandwich
//! functions `L ≤ U` and their generalized inverses.
//!
//! Every operator acts on the tabulated grid; the right-continuous regularization of the
//! population operators is the identity there.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{EvaluationGrid, GridMatrix};
use crate::kernel::ConditionalCdfTable;
use crate::scalar::Scalar;

/// `F̲(y|z)` and `F̄(y|z)` on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct EnvelopeTable<T> {
    pub grid: EvaluationGrid<T>,
    pub flow: GridMatrix<T>,
    pub fhigh: GridMatrix<T>,
}

/// `L(y|z)` and `U(y|z)` on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct SandwichTable<T> {
    pub grid: EvaluationGrid<T>,
    pub l: GridMatrix<T>,
    pub u: GridMatrix<T>,
}

/// Pointwise supremum over `z̃ ≥ z` of the columns of `f`.
pub fn lower_envelope_of<T: Scalar>(f: &GridMatrix<T>) -> GridMatrix<T> {
    let mut out = f.clone();
    for iz in (0..f.nz().saturating_sub(1)).rev() {
        for iy in 0..f.ny() {
            let v = out.get(iy, iz).max(out.get(iy, iz + 1));
            out.set(iy, iz, v);
        }
    }
    out
}

/// `F̲(y|z) = max_{z̃ ≥ z} F(y|z̃)`.
pub fn lower_envelope<T: Scalar>(table: &ConditionalCdfTable<T>) -> GridMatrix<T> {
    lower_envelope_of(&table.f)
}

/// `F̄(y|z) = min_{z̃ ≤ z} [F0(y|z̃) + p(z̃)·1{y ≥ b̲}]`, clipped to `[0, 1]`.
pub fn upper_envelope<T: Scalar>(table: &ConditionalCdfTable<T>, lower_bound: T) -> GridMatrix<T> {
    let (ny, nz) = (table.ny(), table.nz());
    let y = table.grid.y();
    let mut out = GridMatrix::from_fn(ny, nz, |iy, iz| {
        let jump = if y[iy] >= lower_bound {
            table.p[iz]
        } else {
            T::zero()
        };
        (table.f0.get(iy, iz) + jump).max(T::zero()).min(T::one())
    });
    for iz in 1..nz {
        for iy in 0..ny {
            let v = out.get(iy, iz).min(out.get(iy, iz - 1));
            out.set(iy, iz, v);
        }
    }
    out
}

pub fn envelopes<T: Scalar>(table: &ConditionalCdfTable<T>, lower_bound: T) -> EnvelopeTable<T> {
    EnvelopeTable {
        grid: table.grid.clone(),
        flow: lower_envelope(table),
        fhigh: upper_envelope(table, lower_bound),
    }
}

/// Result of comparing `F̲` with `F̄`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub rejected: bool,
    /// `max (F̲ − F̄)` over the grid; negative when the envelopes never touch.
    pub worst_gap: f64,
    /// `(y, z)` cells where `F̲ − F̄ > tol`, worst first.
    pub locations: Vec<(f64, f64)>,
}

pub const POPULATION_CROSSING_TOL: f64 = 1e-9;

/// The model is rejected when the lower envelope exceeds the upper one somewhere.
pub fn crossing_test<T: Scalar>(envelopes: &EnvelopeTable<T>, tol: T) -> CrossingReport {
    let (flow, fhigh) = (&envelopes.flow, &envelopes.fhigh);
    let mut worst = f64::NEG_INFINITY;
    let mut cells = Vec::new();
    for iz in 0..flow.nz() {
        for iy in 0..flow.ny() {
            let gap = flow.get(iy, iz) - fhigh.get(iy, iz);
            worst = worst.max(gap.as_f64());
            if gap > tol {
                cells.push((gap.as_f64(), iy, iz));
            }
        }
    }
    cells.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.2.cmp(&b.2)).then(a.1.cmp(&b.1)));
    let (y, z) = (envelopes.grid.y(), envelopes.grid.z());
    CrossingReport {
        rejected: !cells.is_empty(),
        worst_gap: if worst.is_finite() { worst } else { 0.0 },
        locations: cells
            .into_iter()
            .map(|(_, iy, iz)| (y[iy].as_f64(), z[iz].as_f64()))
            .collect(),
    }
}

/// Running maximum of a column.
pub fn running_max<T: Scalar>(values: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(values.len());
    let mut m = T::neg_infinity();
    for &v in values {
        m = m.max(v);
        out.push(m);
    }
    out
}

/// Running minimum from the top of a column.
pub fn running_min_from_above<T: Scalar>(values: &[T]) -> Vec<T> {
    let mut out = values.to_vec();
    let mut m = T::infinity();
    for v in out.iter_mut().rev() {
        m = m.min(*v);
        *v = m;
    }
    out
}

/// `L = sup_{ỹ ≤ y}(F̲ − F0)`, `U = inf_{ỹ ≥ y}(F̄ − F0)`.
pub fn sandwich<T: Scalar>(
    table: &ConditionalCdfTable<T>,
    envelopes: &EnvelopeTable<T>,
) -> SandwichTable<T> {
    let (ny, nz) = (table.ny(), table.nz());
    let mut l = Vec::with_capacity(nz);
    let mut u = Vec::with_capacity(nz);
    for iz in 0..nz {
        let f0 = table.f0.col(iz);
        let lo: Vec<T> = (0..ny)
            .map(|iy| envelopes.flow.get(iy, iz) - f0[iy])
            .collect();
        let hi: Vec<T> = (0..ny)
            .map(|iy| envelopes.fhigh.get(iy, iz) - f0[iy])
            .collect();
        l.push(running_max(&lo));
        u.push(running_min_from_above(&hi));
    }
    SandwichTable {
        grid: table.grid.clone(),
        l: GridMatrix::from_columns(l),
        u: GridMatrix::from_columns(u),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InverseKind {
    /// `L₋(x) = sup{y : L(y) ≤ x}`
    Lower,
    /// `U⁻(x) = inf{y : U(y) ≥ x}`
    Upper,
}

fn interpolate<T: Scalar>(y0: T, y1: T, v0: T, v1: T, x: T) -> T {
    if v1 > v0 {
        let t = ((x - v0) / (v1 - v0)).max(T::zero()).min(T::one());
        y0 + (y1 - y0) * t
    } else {
        y1
    }
}

/// Values within a few rounding errors of the target count as equal to it, so that a column
/// built as `(F0 + F1) − F0` inverts like `F1` on its flat stretches.
fn tie_tolerance<T: Scalar>(x: T) -> T {
    T::epsilon() * T::lit(16.0) * x.abs().max(T::one())
}

/// `L₋(x)` on a tabulated non-decreasing column.
///
/// The supremum of `{y : L(y) ≤ x}` is the first grid point where the column exceeds `x`: the
/// upper end when none does and the lower end when the first value already does. With
/// `interpolate` the boundary is placed on the linear interpolant between bracketing points.
pub fn lower_inverse<T: Scalar>(y: &[T], column: &[T], x: T, interpolate_flag: bool) -> T {
    let tie = tie_tolerance(x);
    match column.partition_point(|v| *v <= x + tie) {
        k if k == column.len() => y[y.len() - 1],
        0 => y[0],
        k if interpolate_flag => interpolate(y[k - 1], y[k], column[k - 1], column[k], x),
        k => y[k],
    }
}

/// `U⁻(x)` on a tabulated non-decreasing column.
///
/// The infimum of `{y : U(y) ≥ x}` is bounded below by the last grid point where the column is
/// still below `x`; `floor` when the first value already reaches `x`. `None` when the column
/// never reaches `x`, where the infimum is over an empty set.
pub fn upper_inverse<T: Scalar>(
    y: &[T],
    column: &[T],
    x: T,
    floor: T,
    interpolate_flag: bool,
) -> Option<T> {
    let tie = tie_tolerance(x);
    if !(column[column.len() - 1] >= x - tie) {
        return None;
    }
    match column.partition_point(|v| *v < x - tie).checked_sub(1) {
        None => Some(floor),
        Some(k) if interpolate_flag => {
            Some(interpolate(y[k], y[k + 1], column[k], column[k + 1], x))
        }
        Some(k) => Some(y[k]),
    }
}

/// Generalized inverse of a non-decreasing tabulated column, clamped to the grid ends.
pub fn generalized_inverse<T: Scalar>(
    y_grid: &[T],
    column: &[T],
    x: T,
    kind: InverseKind,
    interpolate_flag: bool,
) -> Result<T> {
    if column.is_empty() || column.len() != y_grid.len() {
        return Err(Error::Domain(
            "generalized inverse needs a non-empty column matching the grid".into(),
        ));
    }
    Ok(match kind {
        InverseKind::Lower => lower_inverse(y_grid, column, x, interpolate_flag),
        InverseKind::Upper => upper_inverse(y_grid, column, x, y_grid[0], interpolate_flag)
            .unwrap_or(y_grid[y_grid.len() - 1]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::linspace;

    fn table(
        f0: Vec<Vec<f64>>,
        f1: Vec<Vec<f64>>,
        p: Vec<f64>,
        y: Vec<f64>,
        z: Vec<f64>,
    ) -> ConditionalCdfTable<f64> {
        ConditionalCdfTable::from_parts(
            EvaluationGrid::new(y, z).unwrap(),
            GridMatrix::from_columns(f0),
            GridMatrix::from_columns(f1),
            p,
            None,
        )
        .unwrap()
    }

    #[test]
    fn lower_envelope_takes_pointwise_max_over_higher_z() {
        let t = table(
            vec![vec![0.0; 3], vec![0.0; 3]],
            vec![vec![0.2, 0.5, 1.0], vec![0.3, 0.4, 1.0]],
            vec![1.0, 1.0],
            vec![1.0, 2.0, 3.0],
            vec![0.1, 0.2],
        );
        let env = lower_envelope(&t);
        assert_eq!(env.col(0), &[0.3, 0.5, 1.0]);
        assert_eq!(env.col(1), &[0.3, 0.4, 1.0]);
    }

    #[test]
    fn upper_envelope_takes_min_over_lower_z() {
        let t = table(
            vec![vec![0.1, 0.3, 0.5], vec![0.2, 0.45, 0.6]],
            vec![vec![0.1, 0.2, 0.5], vec![0.1, 0.2, 0.4]],
            vec![0.5, 0.4],
            vec![1.0, 2.0, 3.0],
            vec![0.1, 0.2],
        );
        let env = upper_envelope(&t, 0.0);
        assert!((env.get(1, 1) - 0.8).abs() < 1e-15);
        assert!((env.get(1, 0) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn single_column_envelopes() {
        let t = table(
            vec![vec![0.1, 0.3]],
            vec![vec![0.2, 0.4]],
            vec![0.5],
            vec![1.0, 2.0],
            vec![0.0],
        );
        assert_eq!(lower_envelope(&t), t.f);
        let hi = upper_envelope(&t, 0.0);
        assert_eq!(hi.col(0), &[0.6, 0.8]);
    }

    #[test]
    fn crossing_report_locates_the_gap() {
        let grid = EvaluationGrid::new(vec![1.0, 2.0], vec![0.5]).unwrap();
        let env = EnvelopeTable {
            grid,
            flow: GridMatrix::from_columns(vec![vec![0.2, 0.6]]),
            fhigh: GridMatrix::from_columns(vec![vec![0.3, 0.5]]),
        };
        let r = crossing_test(&env, POPULATION_CROSSING_TOL);
        assert!(r.rejected);
        assert!((r.worst_gap - 0.1).abs() < 1e-12);
        assert_eq!(r.locations, vec![(2.0, 0.5)]);
        let same = EnvelopeTable {
            fhigh: env.flow.clone(),
            ..env
        };
        let r = crossing_test(&same, POPULATION_CROSSING_TOL);
        assert!(!r.rejected);
        assert_eq!(r.worst_gap, 0.0);
    }

    #[test]
    fn running_extrema() {
        assert_eq!(running_max(&[0.2, 0.1, 0.3]), vec![0.2, 0.2, 0.3]);
        assert_eq!(
            running_min_from_above(&[0.5, 0.4, 0.9]),
            vec![0.4, 0.4, 0.9]
        );
    }

    #[test]
    fn identity_column_inverts_with_interpolation() {
        let y = linspace(0.0f64, 1.0, 101);
        let x = generalized_inverse(&y, &y, 0.37, InverseKind::Lower, true).unwrap();
        assert!((x - 0.37).abs() < 1e-12);
        let x = generalized_inverse(&y, &y, 0.37, InverseKind::Upper, true).unwrap();
        assert!((x - 0.37).abs() < 1e-12);
    }

    #[test]
    fn step_column_lower_inverse() {
        let y = linspace(0.0, 1.0, 11);
        let col: Vec<f64> = y.iter().map(|v| if *v < 0.5 { 0.0 } else { 0.6 }).collect();
        assert_eq!(
            generalized_inverse(&y, &col, 0.3, InverseKind::Lower, false).unwrap(),
            0.5
        );
        assert_eq!(
            generalized_inverse(&y, &col, 0.7, InverseKind::Lower, false).unwrap(),
            1.0
        );
    }

    #[test]
    fn upper_inverse_edges() {
        let y = [1.0, 2.0, 3.0];
        let col = [0.2, 0.5, 0.8];
        assert_eq!(upper_inverse(&y, &col, 0.1, 0.0, false), Some(0.0));
        assert_eq!(upper_inverse(&y, &col, 0.5, 0.0, false), Some(1.0));
        assert_eq!(upper_inverse(&y, &col, 0.9, 0.0, false), None);
        assert!(generalized_inverse(&y, &[], 0.5, InverseKind::Upper, false).is_err());
    }
}
