//! High-dimensional tests for spherical location and spiked covariance.
//!
//! The crate computes the classical Watson statistic, its high-dimensional
//! standardization (the modified Watson statistic), the sign statistic and
//! the spikedness statistic; provides exact samplers for rotationally
//! symmetric null models and the spiked Gaussian; and runs reproducible
//! Monte Carlo campaigns checking the standard-normal null law.

// `!(x > tol)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod distributions;
pub mod error;
pub mod inference;
pub mod montecarlo;
pub mod special;
pub mod sphere;
pub mod statistics;
pub mod sum;

pub use distributions::{ModelKind, ModelSpec, RngStream, Sampler};
pub use error::{Error, Result};
pub use inference::{run_test, ReferenceLaw, TestOutcome};
pub use montecarlo::{run_simulation, SimulationConfig, SimulationResult};

pub use sphere::{
    householder_to_pole, project_to_sphere, tangent_normal_decompose, DirectionalSample,
    TangentDecomposition, UnitVector,
};
pub use statistics::{
    sign_statistic, spiked_statistic, watson_classical, watson_modified, StatisticKind,
    StatisticValue,
};
