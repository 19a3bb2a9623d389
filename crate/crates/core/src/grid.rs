use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Finite evaluation grid: strictly increasing income points × instrument points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct EvaluationGrid<T> {
    y: Vec<T>,
    z: Vec<T>,
}

fn check_axis<T: Scalar>(name: &str, values: &[T]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidGrid(format!("{name} grid is empty")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidGrid(format!(
            "{name} grid has non-finite points"
        )));
    }
    if let Some(i) = values.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(format!(
            "{name} grid is not strictly increasing at index {}",
            i + 1
        )));
    }
    Ok(())
}

impl<T: Scalar> EvaluationGrid<T> {
    pub fn new(y: Vec<T>, z: Vec<T>) -> Result<Self> {
        check_axis("y", &y)?;
        check_axis("z", &z)?;
        Ok(Self { y, z })
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn z(&self) -> &[T] {
        &self.z
    }

    pub fn ny(&self) -> usize {
        self.y.len()
    }

    pub fn nz(&self) -> usize {
        self.z.len()
    }

    /// Largest spacing between consecutive income points (0 for a single point).
    pub fn max_y_spacing(&self) -> T {
        self.y
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(T::zero(), T::max)
    }

    pub fn cast<U: Scalar>(&self) -> EvaluationGrid<U> {
        EvaluationGrid {
            y: crate::scalar::cast_slice(&self.y),
            z: crate::scalar::cast_slice(&self.z),
        }
    }
}

/// `n` evenly spaced points on `[lo, hi]` (a single point when `n == 1`).
pub fn linspace<T: Scalar>(lo: T, hi: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / T::lit((n - 1) as f64);
            (0..n)
                .map(|i| {
                    if i + 1 == n {
                        hi
                    } else {
                        lo + step * T::lit(i as f64)
                    }
                })
                .collect()
        }
    }
}

/// Sample quantiles at levels `(k + 0.5) / n`, de-duplicated so the result is strictly increasing.
pub fn quantile_points<T: Scalar>(values: &[T], n: usize) -> Vec<T> {
    let mut sorted: Vec<T> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if sorted.is_empty() || n == 0 {
        return Vec::new();
    }
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mut out: Vec<T> = Vec::with_capacity(n);
    for k in 0..n {
        let level = (k as f64 + 0.5) / n as f64;
        let q = empirical_quantile_sorted(&sorted, level);
        if out.last().is_none_or(|last| q > *last) {
            out.push(q);
        }
    }
    out
}

/// Linear-interpolation sample quantile of an ascending slice.
pub fn empirical_quantile_sorted<T: Scalar>(sorted: &[T], level: f64) -> T {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = level.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = T::lit(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Column-major matrix over an evaluation grid: entry `(iy, iz)`, columns are fixed-`z` slices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMatrix<T> {
    ny: usize,
    nz: usize,
    data: Vec<T>,
}

impl<T: Copy> GridMatrix<T> {
    pub fn filled(ny: usize, nz: usize, value: T) -> Self {
        Self {
            ny,
            nz,
            data: vec![value; ny * nz],
        }
    }

    pub fn from_columns(columns: Vec<Vec<T>>) -> Self {
        let nz = columns.len();
        let ny = columns.first().map_or(0, Vec::len);
        assert!(columns.iter().all(|c| c.len() == ny), "ragged columns");
        Self {
            ny,
            nz,
            data: columns.into_iter().flatten().collect(),
        }
    }

    pub fn from_fn(ny: usize, nz: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(ny * nz);
        for iz in 0..nz {
            for iy in 0..ny {
                data.push(f(iy, iz));
            }
        }
        Self { ny, nz, data }
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    #[inline]
    pub fn get(&self, iy: usize, iz: usize) -> T {
        self.data[iz * self.ny + iy]
    }

    #[inline]
    pub fn set(&mut self, iy: usize, iz: usize, value: T) {
        self.data[iz * self.ny + iy] = value;
    }

    pub fn col(&self, iz: usize) -> &[T] {
        &self.data[iz * self.ny..(iz + 1) * self.ny]
    }

    pub fn col_mut(&mut self, iz: usize) -> &mut [T] {
        &mut self.data[iz * self.ny..(iz + 1) * self.ny]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.ny.max(1)).take(self.nz)
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn map<U: Copy>(&self, f: impl FnMut(T) -> U) -> GridMatrix<U> {
        GridMatrix {
            ny: self.ny,
            nz: self.nz,
            data: self.data.iter().copied().map(f).collect(),
        }
    }

    pub fn same_shape<U>(&self, other: &GridMatrix<U>) -> bool {
        self.ny == other.ny && self.nz == other.nz
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unsorted_and_empty_axes() {
        assert!(EvaluationGrid::new(vec![1.0, 1.0], vec![0.0]).is_err());
        assert!(EvaluationGrid::<f64>::new(vec![], vec![0.0]).is_err());
        assert!(EvaluationGrid::new(vec![1.0, 2.0], vec![0.3, 0.2]).is_err());
        assert!(EvaluationGrid::new(vec![1.0, 2.0], vec![0.2, 0.3]).is_ok());
    }

    #[test]
    fn linspace_hits_endpoints() {
        let v = linspace(0.12f64, 0.19, 8);
        assert_eq!(v.len(), 8);
        assert_eq!(v[0], 0.12);
        assert_eq!(v[7], 0.19);
        assert!((v[1] - 0.13).abs() < 1e-12);
    }

    #[test]
    fn quantile_points_are_strictly_increasing_with_ties() {
        let data = [1.0, 1.0, 1.0, 2.0, 2.0, 3.0];
        let q = quantile_points(&data, 10);
        assert!(q.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(q[0], 1.0);
    }

    #[test]
    fn matrix_columns_are_z_slices() {
        let m = GridMatrix::from_fn(3, 2, |iy, iz| (10 * iz + iy) as f64);
        assert_eq!(m.col(1), &[10.0, 11.0, 12.0]);
        assert_eq!(m.get(2, 0), 2.0);
    }
}
