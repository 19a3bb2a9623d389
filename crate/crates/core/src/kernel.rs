//! Local linear estimation of conditional distribution functions with an Epanechnikov kernel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{empirical_quantile_sorted, EvaluationGrid, GridMatrix};
use crate::model::ObservationSample;
use crate::scalar::Scalar;

/// `K(u) = 0.75 (1 − u²)` on `|u| ≤ 1`.
#[inline]
pub fn epanechnikov<T: Scalar>(u: T) -> T {
    if u.abs() <= T::one() {
        T::lit(0.75) * (T::one() - u * u)
    } else {
        T::zero()
    }
}

/// Equivalent-kernel weights of the local linear fit at `z0`, as `(index, weight)` pairs.
///
/// The weights sum to one, so the fitted intercept is `Σ ℓᵢ rᵢ` for any response vector.
pub fn local_linear_weights<T: Scalar>(z: &[T], z0: T, h: T) -> Result<Vec<(usize, T)>> {
    if !(h > T::zero()) {
        return Err(Error::Domain(format!(
            "bandwidth must be positive, got {h}"
        )));
    }
    let mut window = Vec::new();
    let (mut s0, mut s1, mut s2) = (T::zero(), T::zero(), T::zero());
    for (i, &zi) in z.iter().enumerate() {
        let d = zi - z0;
        let w = epanechnikov(d / h);
        if w > T::zero() {
            s0 = s0 + w;
            s1 = s1 + w * d;
            s2 = s2 + w * d * d;
            window.push((i, w, d));
        }
    }
    if window.is_empty() {
        return Err(Error::NoSupport {
            z0: z0.as_f64(),
            bandwidth: h.as_f64(),
        });
    }
    let det = s0 * s2 - s1 * s1;
    let singular = !(det > T::lit(1e-10) * s0 * s2) || !(det > T::zero());
    let mut weights: Vec<(usize, T)> = if singular {
        window.iter().map(|&(i, w, _)| (i, w)).collect()
    } else {
        window
            .iter()
            .map(|&(i, w, d)| (i, w * (s2 - s1 * d) / det))
            .collect()
    };
    let total: T = weights.iter().map(|(_, w)| *w).sum();
    for (_, w) in &mut weights {
        *w = *w / total;
    }
    Ok(weights)
}

/// Intercept of the kernel-weighted least-squares fit of `responses` on `(1, Zᵢ − z0)`.
///
/// Falls back to the local constant fit when every in-window instrument value is equal.
pub fn local_linear_fit<T: Scalar>(
    sample: &ObservationSample<T>,
    responses: &[T],
    z0: T,
    h: T,
) -> Result<T> {
    if responses.len() != sample.len() {
        return Err(Error::InvalidSample(format!(
            "{} responses for {} records",
            responses.len(),
            sample.len()
        )));
    }
    let weights = local_linear_weights(sample.z(), z0, h)?;
    Ok(weights.iter().map(|&(i, w)| w * responses[i]).sum())
}

/// Rule-of-thumb bandwidth `2.34 · min(sd, IQR/1.349) · n^(−1/5)` for the Epanechnikov kernel.
pub fn silverman_bandwidth<T: Scalar>(z: &[T]) -> Result<T> {
    let n = z.len();
    if n < 2 {
        return Err(Error::InvalidSample(
            "bandwidth rule needs at least two observations".into(),
        ));
    }
    let nf = n as f64;
    let zs: Vec<f64> = z.iter().map(|v| v.as_f64()).collect();
    let mean = zs.iter().sum::<f64>() / nf;
    let sd = (zs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt();
    let mut sorted = zs;
    sorted.sort_by(f64::total_cmp);
    let iqr = empirical_quantile_sorted(&sorted, 0.75) - empirical_quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.349) } else { sd };
    if !(spread > 0.0) {
        return Err(Error::InvalidSample(
            "instrument has no spread; supply a bandwidth".into(),
        ));
    }
    Ok(T::lit(2.34 * spread * nf.powf(-0.2)))
}

/// Tabulated `F(y|z)`, `F0(y|z) = P(Y≤y, D=0|z)`, `F1(y|z) = P(Y≤y, D=1|z)` and `p(z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct ConditionalCdfTable<T> {
    pub grid: EvaluationGrid<T>,
    pub f: GridMatrix<T>,
    pub f0: GridMatrix<T>,
    pub f1: GridMatrix<T>,
    pub p: Vec<T>,
    /// `None` for population tables.
    pub bandwidth: Option<T>,
}

impl<T: Scalar> ConditionalCdfTable<T> {
    /// Table from the two sub-distribution matrices; `F = min(F0 + F1, 1)`.
    pub fn from_parts(
        grid: EvaluationGrid<T>,
        f0: GridMatrix<T>,
        f1: GridMatrix<T>,
        p: Vec<T>,
        bandwidth: Option<T>,
    ) -> Result<Self> {
        let (ny, nz) = (grid.ny(), grid.nz());
        if f0.ny() != ny || f0.nz() != nz || !f0.same_shape(&f1) || p.len() != nz {
            return Err(Error::InvalidGrid(
                "table dimensions do not match the grid".into(),
            ));
        }
        let f = GridMatrix::from_fn(ny, nz, |iy, iz| {
            (f0.get(iy, iz) + f1.get(iy, iz)).min(T::one())
        });
        Ok(Self {
            grid,
            f,
            f0,
            f1,
            p,
            bandwidth,
        })
    }

    pub fn ny(&self) -> usize {
        self.grid.ny()
    }

    pub fn nz(&self) -> usize {
        self.grid.nz()
    }

    pub fn cast<U: Scalar>(&self) -> ConditionalCdfTable<U> {
        let c = |m: &GridMatrix<T>| m.map(|v| U::lit(v.as_f64()));
        ConditionalCdfTable {
            grid: self.grid.cast(),
            f: c(&self.f),
            f0: c(&self.f0),
            f1: c(&self.f1),
            p: crate::scalar::cast_slice(&self.p),
            bandwidth: self.bandwidth.map(|h| U::lit(h.as_f64())),
        }
    }

    /// Checks the table invariants: entries in `[0,1]`, `F = F0 + F1`, monotone columns.
    pub fn validate(&self, tol: T) -> Result<()> {
        let unit = |v: T| v >= -tol && v <= T::one() + tol;
        for iz in 0..self.nz() {
            if !unit(self.p[iz]) {
                return Err(Error::Domain(format!("p out of [0,1] at column {iz}")));
            }
            for iy in 0..self.ny() {
                let (f, f0, f1) = (self.f.get(iy, iz), self.f0.get(iy, iz), self.f1.get(iy, iz));
                if !unit(f) || !unit(f0) || !unit(f1) {
                    return Err(Error::Domain(format!("entry out of [0,1] at ({iy}, {iz})")));
                }
                if (f - f0 - f1).abs() > tol {
                    return Err(Error::Domain(format!("F != F0 + F1 at ({iy}, {iz})")));
                }
                if iy > 0 {
                    for m in [&self.f, &self.f0, &self.f1] {
                        if m.get(iy, iz) < m.get(iy - 1, iz) - tol {
                            return Err(Error::Domain(format!(
                                "column {iz} decreases at row {iy}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableOptions {
    /// Running-maximum repair of each column; off only for diagnostics.
    pub monotonize: bool,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self { monotonize: true }
    }
}

/// Repairs one raw column pair in place so that entries lie in `[0,1]`, both columns are
/// non-decreasing and `F0 + F1 ≤ 1`.
///
/// Once the sum saturates at one, both columns are held constant.
pub fn repair_column<T: Scalar>(f0: &mut [T], f1: &mut [T], monotonize: bool) {
    let clip = |v: T| v.max(T::zero()).min(T::one());
    if !monotonize {
        for (a, b) in f0.iter_mut().zip(f1.iter_mut()) {
            *a = clip(*a);
            *b = clip(*b);
            let s = *a + *b;
            if s > T::one() {
                *a = *a / s;
                *b = *b / s;
            }
        }
        return;
    }
    let (mut prev0, mut prev1) = (T::zero(), T::zero());
    let mut saturated = false;
    for (a, b) in f0.iter_mut().zip(f1.iter_mut()) {
        if saturated {
            *a = prev0;
            *b = prev1;
            continue;
        }
        let mut c0 = clip(*a).max(prev0);
        let mut c1 = clip(*b).max(prev1);
        if c0 + c1 >= T::one() {
            c0 = c0.max(prev0).min(T::one() - prev1);
            c1 = T::one() - c0;
            saturated = true;
        }
        *a = c0;
        *b = c1;
        prev0 = c0;
        prev1 = c1;
    }
}

struct ColumnEstimate<T> {
    f0: Vec<T>,
    f1: Vec<T>,
    p: T,
}

/// Raw (unrepaired) local linear estimates of `F0`, `F1` and `p` at one instrument value.
///
/// Cumulative sums of the equivalent-kernel weights over the records sorted by income.
fn raw_column<T: Scalar>(
    sample: &ObservationSample<T>,
    order: &[usize],
    y_grid: &[T],
    z0: T,
    h: T,
) -> Result<ColumnEstimate<T>> {
    let weights = local_linear_weights(sample.z(), z0, h)?;
    let mut dense = vec![T::zero(); sample.len()];
    for &(i, w) in &weights {
        dense[i] = w;
    }
    let (ys, ds) = (sample.y(), sample.d());
    let mut f0 = Vec::with_capacity(y_grid.len());
    let mut f1 = Vec::with_capacity(y_grid.len());
    let (mut acc0, mut acc1) = (T::zero(), T::zero());
    let mut k = 0;
    for &y in y_grid {
        while k < order.len() && ys[order[k]] <= y {
            let i = order[k];
            if ds[i] {
                acc1 = acc1 + dense[i];
            } else {
                acc0 = acc0 + dense[i];
            }
            k += 1;
        }
        f0.push(acc0);
        f1.push(acc1);
    }
    let p = weights
        .iter()
        .filter(|(i, _)| ds[*i])
        .map(|(_, w)| *w)
        .sum();
    Ok(ColumnEstimate { f0, f1, p })
}

pub(crate) fn income_order<T: Scalar>(sample: &ObservationSample<T>) -> Vec<usize> {
    let ys = sample.y();
    let mut order: Vec<usize> = (0..sample.len()).collect();
    order.sort_by(|&a, &b| ys[a].partial_cmp(&ys[b]).expect("finite incomes"));
    order
}

/// Estimates every conditional distribution object on the grid.
pub fn estimate_tables<T: Scalar>(
    sample: &ObservationSample<T>,
    grid: &EvaluationGrid<T>,
    h: T,
) -> Result<ConditionalCdfTable<T>> {
    estimate_tables_with(sample, grid, h, TableOptions::default())
}

pub fn estimate_tables_with<T: Scalar>(
    sample: &ObservationSample<T>,
    grid: &EvaluationGrid<T>,
    h: T,
    options: TableOptions,
) -> Result<ConditionalCdfTable<T>> {
    if sample.is_empty() {
        return Err(Error::InvalidSample("sample is empty".into()));
    }
    let order = income_order(sample);
    let columns: Vec<ColumnEstimate<T>> = grid
        .z()
        .par_iter()
        .map(|&z0| {
            let mut col = raw_column(sample, &order, grid.y(), z0, h)?;
            repair_column(&mut col.f0, &mut col.f1, options.monotonize);
            col.p = col.p.max(T::zero()).min(T::one());
            Ok(col)
        })
        .collect::<Result<_>>()?;
    let p = columns.iter().map(|c| c.p).collect();
    let (f0, f1): (Vec<_>, Vec<_>) = columns.into_iter().map(|c| (c.f0, c.f1)).unzip();
    ConditionalCdfTable::from_parts(
        grid.clone(),
        GridMatrix::from_columns(f0),
        GridMatrix::from_columns(f1),
        p,
        Some(h),
    )
}

/// Local linear estimates of `E[r | Z = z]` over `z_grid` for a response vector `r`.
pub fn conditional_means<T: Scalar>(
    sample: &ObservationSample<T>,
    responses: &[T],
    z_grid: &[T],
    h: T,
) -> Result<Vec<T>> {
    z_grid
        .par_iter()
        .map(|&z0| local_linear_fit(sample, responses, z0, h))
        .collect()
}
