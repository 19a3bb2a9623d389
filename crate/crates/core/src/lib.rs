//! Sharp partial-identification bounds on the non-pecuniary cost of an extended Roy model,
//! with one-sided uniform confidence bands for the minimal cost.
//!
//! Estimators are generic over [`Scalar`] (`f32` or `f64`); the crate root re-exports `f64`
//! aliases for the common case.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod coverage;
pub mod envelopes;
pub mod error;
pub mod grid;
pub mod inference;
pub mod io;
pub mod kernel;
pub mod model;
pub mod presets;
pub mod rng;
pub mod scalar;
pub mod survival;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Sample = model::ObservationSample<f64>;
pub type Grid = grid::EvaluationGrid<f64>;
pub type Matrix<T = f64> = grid::GridMatrix<T>;
pub type CdfTable = kernel::ConditionalCdfTable<f64>;
pub type Envelopes = envelopes::EnvelopeTable<f64>;
pub type Sandwich = envelopes::SandwichTable<f64>;
pub type Surface = bounds::BoundSurface<f64>;
pub type IfCurve = bounds::IfBoundCurve<f64>;
pub type CostCdfBounds = bounds::RandomCostCdfBounds<f64>;
pub type Band = inference::ConfidenceBand<f64>;
pub type FiberTable = inference::GTable<f64>;
