//! Domain types, structural cost functions and synthetic data-generating processes.

mod dgp;
mod laws;
mod population;
mod utility;

pub use dgp::{
    generate_sample, generate_sample_with, true_cost, CostFamily, CostModel, CostParams, CostTable,
    Coupling, DgpParams, DgpSpec, Foresight, OutcomeModel, ResolvedDgp, ZLaw,
};
pub use laws::{norm_cdf, norm_pdf, norm_quantile, Affine, MarginalLaw, SectorLaw};
pub use population::{
    check_smiv_data, check_smiv_dgp, check_z_monotone, lower_orthant_probability,
    population_tables, SmivReport,
};
pub use utility::{cost_from_utilities, invert_u0, SectorUtilityPair};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One observed triple `(Y, D, Z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record<T> {
    pub y: T,
    pub d: bool,
    pub z: T,
}

/// Observed sample of incomes, sector indicators and instrument values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSample<T> {
    y: Vec<T>,
    d: Vec<bool>,
    z: Vec<T>,
    lower_support_bound: T,
}

impl<T: Scalar> ObservationSample<T> {
    pub fn new(y: Vec<T>, d: Vec<bool>, z: Vec<T>, lower_support_bound: T) -> Result<Self> {
        if y.len() != d.len() || y.len() != z.len() {
            return Err(Error::InvalidSample(format!(
                "column lengths differ: y={}, d={}, z={}",
                y.len(),
                d.len(),
                z.len()
            )));
        }
        if let Some(i) = y
            .iter()
            .position(|v| !v.is_finite() || *v < lower_support_bound)
        {
            return Err(Error::InvalidSample(format!(
                "record {i}: outcome {} is below the support bound {} or not finite",
                y[i], lower_support_bound
            )));
        }
        if let Some(i) = z.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSample(format!(
                "record {i}: instrument is not finite"
            )));
        }
        Ok(Self {
            y,
            d,
            z,
            lower_support_bound,
        })
    }

    pub fn from_records(records: &[Record<T>], lower_support_bound: T) -> Result<Self> {
        Self::new(
            records.iter().map(|r| r.y).collect(),
            records.iter().map(|r| r.d).collect(),
            records.iter().map(|r| r.z).collect(),
            lower_support_bound,
        )
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn d(&self) -> &[bool] {
        &self.d
    }

    pub fn z(&self) -> &[T] {
        &self.z
    }

    pub fn lower_support_bound(&self) -> T {
        self.lower_support_bound
    }

    pub fn record(&self, i: usize) -> Record<T> {
        Record {
            y: self.y[i],
            d: self.d[i],
            z: self.z[i],
        }
    }

    pub fn records(&self) -> impl Iterator<Item = Record<T>> + '_ {
        (0..self.len()).map(|i| self.record(i))
    }

    /// Bound operations compare conditional laws across instrument values.
    pub fn require_distinct_z(&self) -> Result<()> {
        let first = self.z.first().copied();
        match first {
            Some(z0) if self.z.iter().any(|z| *z != z0) => Ok(()),
            _ => Err(Error::InvalidSample(
                "at least two distinct instrument values are required".into(),
            )),
        }
    }

    /// Sample made of the records at `indices` (with repetition).
    pub fn resample(&self, indices: &[usize]) -> Self {
        Self {
            y: indices.iter().map(|&i| self.y[i]).collect(),
            d: indices.iter().map(|&i| self.d[i]).collect(),
            z: indices.iter().map(|&i| self.z[i]).collect(),
            lower_support_bound: self.lower_support_bound,
        }
    }

    pub fn share_treated(&self) -> T {
        if self.is_empty() {
            return T::zero();
        }
        let k = self.d.iter().filter(|d| **d).count();
        T::lit(k as f64 / self.len() as f64)
    }

    pub fn cast<U: Scalar>(&self) -> ObservationSample<U> {
        ObservationSample {
            y: crate::scalar::cast_slice(&self.y),
            d: self.d.clone(),
            z: crate::scalar::cast_slice(&self.z),
            lower_support_bound: U::lit(self.lower_support_bound.as_f64()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_outcomes_below_support() {
        let err = ObservationSample::new(vec![1.0, -0.5], vec![true, false], vec![0.1, 0.2], 0.0);
        assert!(matches!(err, Err(Error::InvalidSample(_))));
    }

    #[test]
    fn distinct_instrument_values_required() {
        let s =
            ObservationSample::new(vec![1.0, 2.0], vec![true, false], vec![0.3, 0.3], 0.0).unwrap();
        assert!(s.require_distinct_z().is_err());
        let s =
            ObservationSample::new(vec![1.0, 2.0], vec![true, false], vec![0.3, 0.4], 0.0).unwrap();
        assert!(s.require_distinct_z().is_ok());
    }
}
