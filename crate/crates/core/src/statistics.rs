//! Location and spikedness test statistics.
//!
//! All pairwise U-statistics are evaluated in `O(np)` through the identity
//! `Σ_{i<j} aᵢ'aⱼ = (‖Σᵢ aᵢ‖² − Σᵢ ‖aᵢ‖²) / 2` with compensated reductions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{self, DirectionalSample, TangentDecomposition, UnitVector};
use crate::sum::{self, NeumaierSum, VectorSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatisticKind {
    #[serde(rename = "classical")]
    ClassicalWatson,
    #[serde(rename = "modified")]
    ModifiedWatson,
    Sign,
    #[serde(rename = "spiked")]
    SpikedWatson,
}

impl StatisticKind {
    pub const ALL: [StatisticKind; 4] = [
        StatisticKind::ClassicalWatson,
        StatisticKind::ModifiedWatson,
        StatisticKind::Sign,
        StatisticKind::SpikedWatson,
    ];

    /// Short name used on the command line and in output files.
    pub fn name(self) -> &'static str {
        match self {
            StatisticKind::ClassicalWatson => "classical",
            StatisticKind::ModifiedWatson => "modified",
            StatisticKind::Sign => "sign",
            StatisticKind::SpikedWatson => "spiked",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl std::fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatisticValue {
    pub value: f64,
    pub kind: StatisticKind,
    pub n: usize,
    pub p: usize,
}

/// `√(2(p−1))`, the scale shared by the high-dimensional statistics.
fn hd_scale(p: usize) -> f64 {
    (2.0 * (p as f64 - 1.0)).sqrt()
}

/// `Σ_{i<j} uᵢuⱼ Sᵢ'Sⱼ` and `Σᵢ uᵢ²`.
pub fn weighted_pair_sum(d: &TangentDecomposition) -> (f64, f64) {
    let mut total = VectorSum::zeros(d.dim());
    let mut diag = NeumaierSum::new();
    for (u, s) in d.radial.iter().zip(d.signs()) {
        total.add_scaled(*u, s);
        diag.add(u * u * sum::norm_sq(s));
    }
    let full = sum::norm_sq(&total.values());
    let sum_u2 = sum::sum(d.radial.iter().map(|u| u * u));
    (0.5 * (full - diag.value()), sum_u2)
}

/// `Σ_{i<j} Sᵢ'Sⱼ`.
pub fn sign_pair_sum(d: &TangentDecomposition) -> f64 {
    let mut total = VectorSum::zeros(d.dim());
    let mut diag = NeumaierSum::new();
    for s in d.signs() {
        total.add_scaled(1.0, s);
        diag.add(sum::norm_sq(s));
    }
    0.5 * (sum::norm_sq(&total.values()) - diag.value())
}

fn check_pole(sample: &DirectionalSample, pole: &UnitVector) -> Result<()> {
    if pole.dim() != sample.dim() {
        return Err(Error::DimensionMismatch {
            index: 0,
            expected: sample.dim(),
            found: pole.dim(),
        });
    }
    Ok(())
}

/// Classical Watson statistic from the projected sample mean:
/// `n(p−1)·X̄'(I − θ₀θ₀')X̄ / (1 − n⁻¹Σ(Xᵢ'θ₀)²)`.
pub fn watson_classical(sample: &DirectionalSample, pole: &UnitVector) -> Result<StatisticValue> {
    check_pole(sample, pole)?;
    let (n, p) = (sample.n(), sample.dim());
    let theta = pole.as_slice();
    let mut total = VectorSum::zeros(p);
    // 1 − (Xᵢ'θ₀)² accumulated as ‖Xᵢ − (Xᵢ'θ₀)θ₀‖² to avoid cancellation.
    let mut off_axis = NeumaierSum::new();
    for x in sample.iter() {
        total.add_scaled(1.0, x);
        let t = sum::dot(x, theta);
        off_axis.add(sum::sum(
            x.iter().zip(theta).map(|(xi, th)| (xi - t * th).powi(2)),
        ));
    }
    let mean: Vec<f64> = total.values().into_iter().map(|v| v / n as f64).collect();
    let along = sum::dot(&mean, theta);
    let quad = sum::sum(mean.iter().zip(theta).map(|(m, th)| {
        let r = m - along * th;
        r * r
    }));
    let denom = off_axis.value() / n as f64;
    if !(denom > 4.0 * f64::EPSILON) {
        return Err(Error::DegenerateDenominator);
    }
    Ok(StatisticValue {
        value: n as f64 * (p as f64 - 1.0) * quad / denom,
        kind: StatisticKind::ClassicalWatson,
        n,
        p,
    })
}

/// Modified Watson statistic from an existing decomposition (pairwise form).
pub fn modified_from_decomposition(d: &TangentDecomposition) -> Result<StatisticValue> {
    let (pairs, sum_u2) = weighted_pair_sum(d);
    if !(sum_u2 > 0.0) {
        return Err(Error::DegenerateDenominator);
    }
    Ok(StatisticValue {
        value: hd_scale(d.dim()) * pairs / sum_u2,
        kind: StatisticKind::ModifiedWatson,
        n: d.n(),
        p: d.dim(),
    })
}

/// `(Wₙ − (p−1)) / √(2(p−1))`, evaluated through [`watson_classical`].
pub fn modified_via_classical(
    sample: &DirectionalSample,
    pole: &UnitVector,
) -> Result<StatisticValue> {
    let w = watson_classical(sample, pole)?;
    let df = w.p as f64 - 1.0;
    Ok(StatisticValue {
        value: (w.value - df) / hd_scale(w.p),
        kind: StatisticKind::ModifiedWatson,
        ..w
    })
}

/// Modified Watson statistic
/// `√(2(p−1))·Σ_{i<j} uᵢuⱼSᵢ'Sⱼ / Σᵢuᵢ²`.
pub fn watson_modified(sample: &DirectionalSample, pole: &UnitVector) -> Result<StatisticValue> {
    let d = sphere::tangent_normal_decompose(sample, pole, sphere::DEFAULT_TOL)?;
    modified_from_decomposition(&d)
}

pub fn sign_from_decomposition(d: &TangentDecomposition) -> StatisticValue {
    let n = d.n();
    StatisticValue {
        value: hd_scale(d.dim()) / n as f64 * sign_pair_sum(d),
        kind: StatisticKind::Sign,
        n,
        p: d.dim(),
    }
}

/// Sign statistic `(√(2(p−1))/n)·Σ_{i<j} Sᵢ'Sⱼ`.
pub fn sign_statistic(sample: &DirectionalSample, pole: &UnitVector) -> Result<StatisticValue> {
    let d = sphere::tangent_normal_decompose(sample, pole, sphere::DEFAULT_TOL)?;
    Ok(sign_from_decomposition(&d))
}

/// Spikedness statistic: the modified Watson statistic of the projections
/// `Yᵢ/‖Yᵢ‖`.
pub fn spiked_statistic(raw: &[Vec<f64>], pole: &UnitVector) -> Result<StatisticValue> {
    let sample = DirectionalSample::from_raw(raw, sphere::DEFAULT_TOL)?;
    spiked_from_projected(&sample, pole)
}

pub(crate) fn spiked_from_projected(
    sample: &DirectionalSample,
    pole: &UnitVector,
) -> Result<StatisticValue> {
    let w = watson_modified(sample, pole)?;
    Ok(StatisticValue {
        kind: StatisticKind::SpikedWatson,
        ..w
    })
}
