//! Test decisions: critical values, one-sided p-values and reject flags.
//!
//! All four tests reject for large values. The decision uses the strict
//! inequality `statistic > critical value`, so a statistic sitting exactly on
//! the critical value is not rejected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special;
use crate::sphere::{DirectionalSample, UnitVector};
use crate::statistics::{self, StatisticKind, StatisticValue};

/// Norm tolerance applied to directional input before renormalization.
pub const INPUT_UNIT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReferenceLaw {
    Normal,
    ChiSquare(u32),
}

impl ReferenceLaw {
    pub fn for_statistic(kind: StatisticKind, p: usize) -> Self {
        match kind {
            StatisticKind::ClassicalWatson => ReferenceLaw::ChiSquare(p as u32 - 1),
            _ => ReferenceLaw::Normal,
        }
    }

    pub fn cdf(self, x: f64) -> f64 {
        match self {
            ReferenceLaw::Normal => special::normal_cdf(x),
            ReferenceLaw::ChiSquare(df) => special::chisquare_cdf(x, df),
        }
    }

    /// Upper tail `1 − CDF(x)`.
    pub fn sf(self, x: f64) -> f64 {
        match self {
            ReferenceLaw::Normal => special::normal_sf(x),
            ReferenceLaw::ChiSquare(df) => special::chisquare_sf(x, df),
        }
    }

    pub fn quantile(self, q: f64) -> Result<f64> {
        match self {
            ReferenceLaw::Normal => special::normal_quantile(q),
            ReferenceLaw::ChiSquare(df) => special::chisquare_quantile(q, df),
        }
    }
}

impl std::fmt::Display for ReferenceLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReferenceLaw::Normal => write!(f, "normal"),
            ReferenceLaw::ChiSquare(df) => write!(f, "chisq({df})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub statistic: StatisticValue,
    pub alpha: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
    pub reference: ReferenceLaw,
}

pub use special::{chisquare_quantile, normal_quantile};

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::DomainError(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// Critical value of the level-`alpha` test based on `kind` in dimension `p`.
pub fn critical_value(kind: StatisticKind, p: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    ReferenceLaw::for_statistic(kind, p).quantile(1.0 - alpha)
}

/// Turns a computed statistic into a decision at level `alpha`.
pub fn decide(statistic: StatisticValue, alpha: f64) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    let reference = ReferenceLaw::for_statistic(statistic.kind, statistic.p);
    let critical_value = reference.quantile(1.0 - alpha)?;
    Ok(TestOutcome {
        statistic,
        alpha,
        critical_value,
        p_value: reference.sf(statistic.value).clamp(0.0, 1.0),
        reject: statistic.value > critical_value,
        reference,
    })
}

/// Runs one test on row data: raw vectors for [`StatisticKind::SpikedWatson`],
/// unit vectors (checked to `1e-8`, then renormalized) for the other methods.
pub fn run_test(
    rows: &[Vec<f64>],
    pole: &UnitVector,
    method: StatisticKind,
    alpha: f64,
) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    let statistic = match method {
        StatisticKind::SpikedWatson => statistics::spiked_statistic(rows, pole)?,
        kind => {
            let sample = DirectionalSample::from_rows_normalized(rows, INPUT_UNIT_TOL)?;
            match kind {
                StatisticKind::ClassicalWatson => statistics::watson_classical(&sample, pole)?,
                StatisticKind::ModifiedWatson => statistics::watson_modified(&sample, pole)?,
                _ => statistics::sign_statistic(&sample, pole)?,
            }
        }
    };
    decide(statistic, alpha)
}
