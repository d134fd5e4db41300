//! Exact samplers for the null models: uniform on the sphere, uniform on the
//! tangent sphere at the pole, FvML, Purkayastha and the θ₀-spiked Gaussian.

mod cosine;
mod rng;

pub use cosine::{
    adaptive_simpson, log_density, FvmlCosine, TabulatedCosineLaw, Tilt, MAX_PROPOSALS, TABLE_KNOTS,
};
pub use rng::RngStream;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{DirectionalSample, Householder, UnitVector, DEFAULT_TOL};
use crate::sum::{self, NeumaierSum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "lowercase")]
pub enum ModelKind {
    #[serde(rename = "uniform")]
    UniformSphere,
    #[serde(rename = "tangent")]
    TangentUniform,
    #[serde(rename = "fvml")]
    FvML {
        kappa: f64,
    },
    Purkayastha {
        kappa: f64,
    },
    #[serde(rename = "spiked")]
    SpikedGaussian {
        sigma2: f64,
        lambda: f64,
    },
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::UniformSphere => "uniform",
            ModelKind::TangentUniform => "tangent",
            ModelKind::FvML { .. } => "fvml",
            ModelKind::Purkayastha { .. } => "purkayastha",
            ModelKind::SpikedGaussian { .. } => "spiked",
        }
    }

    /// Whether draws are unit vectors (as opposed to raw Gaussian vectors).
    pub fn is_directional(&self) -> bool {
        !matches!(self, ModelKind::SpikedGaussian { .. })
    }
}

/// A sampling distribution in dimension `p` about `pole`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    kind: ModelKind,
    pole: UnitVector,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, pole: UnitVector) -> Result<Self> {
        let p = pole.dim();
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match kind {
            ModelKind::FvML { kappa } | ModelKind::Purkayastha { kappa } => {
                if !(kappa > 0.0 && kappa.is_finite()) {
                    return bad(format!("kappa must be finite and > 0, got {kappa}"));
                }
            }
            ModelKind::SpikedGaussian { sigma2, lambda } => {
                if !(sigma2 > 0.0 && sigma2.is_finite()) {
                    return bad(format!("sigma2 must be finite and > 0, got {sigma2}"));
                }
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return bad(format!("lambda must be finite and > 0, got {lambda}"));
                }
            }
            _ => {}
        }
        let min_p = match kind {
            ModelKind::UniformSphere | ModelKind::SpikedGaussian { .. } => 2,
            _ => 3,
        };
        if p < min_p {
            return bad(format!("{} model needs p >= {min_p}, got {p}", kind.name()));
        }
        Ok(Self { kind, pole })
    }

    /// Model about the first canonical basis vector of `R^p`.
    pub fn about_e1(kind: ModelKind, p: usize) -> Result<Self> {
        Self::new(kind, UnitVector::e1(p)?)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn pole(&self) -> &UnitVector {
        &self.pole
    }

    pub fn dim(&self) -> usize {
        self.pole.dim()
    }

    /// Same model in dimension `p`. A pole equal to `e₁` is re-expressed as
    /// `e₁` of `R^p`; any other pole must already have dimension `p`.
    pub fn with_dim(&self, p: usize) -> Result<Self> {
        if p == self.dim() {
            return Ok(self.clone());
        }
        let th = self.pole.as_slice();
        if th[0] == 1.0 && th[1..].iter().all(|&x| x == 0.0) {
            return Self::about_e1(self.kind, p);
        }
        Err(Error::DimensionMismatch {
            index: 0,
            expected: p,
            found: self.dim(),
        })
    }
}

enum CosineSampler {
    Uniform,
    Tangent,
    Fvml(FvmlCosine),
    Table(TabulatedCosineLaw),
}

/// A model with its per-dimension setup (envelope constants, CDF table)
/// computed once and reused across draws.
pub struct Sampler {
    spec: ModelSpec,
    householder: Householder,
    cosine: Option<CosineSampler>,
}

impl Sampler {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        let p = spec.dim();
        let cosine = match spec.kind {
            ModelKind::UniformSphere => Some(CosineSampler::Uniform),
            ModelKind::TangentUniform => Some(CosineSampler::Tangent),
            ModelKind::FvML { kappa } => Some(CosineSampler::Fvml(FvmlCosine::new(p, kappa)?)),
            ModelKind::Purkayastha { kappa } => Some(CosineSampler::Table(
                TabulatedCosineLaw::new(p, Tilt::Angular(kappa))?,
            )),
            ModelKind::SpikedGaussian { .. } => None,
        };
        Ok(Self {
            spec: spec.clone(),
            householder: Householder::to_pole(&spec.pole),
            cosine,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// One cosine `X'θ₀` (directional models only).
    pub fn cosine(&self, rng: &mut RngStream) -> Result<f64> {
        match &self.cosine {
            Some(CosineSampler::Tangent) => Ok(0.0),
            Some(CosineSampler::Fvml(s)) => s.sample(rng),
            Some(CosineSampler::Table(t)) => Ok(t.sample(rng)),
            Some(CosineSampler::Uniform) => {
                let mut x = vec![0.0; self.spec.dim()];
                uniform_direction(rng, &mut x);
                Ok(x[0])
            }
            None => Err(Error::InvalidParameter(
                "spiked Gaussian model has no cosine law".into(),
            )),
        }
    }

    /// Writes one draw into `out` (length `p`): a unit vector for directional
    /// models, a raw Gaussian vector for the spiked model.
    pub fn draw_into(&self, rng: &mut RngStream, out: &mut [f64]) -> Result<()> {
        let p = self.spec.dim();
        debug_assert_eq!(out.len(), p);
        match self.spec.kind {
            ModelKind::UniformSphere => {
                uniform_direction(rng, out);
            }
            ModelKind::SpikedGaussian { sigma2, lambda } => {
                for x in out.iter_mut() {
                    *x = StandardNormal.sample(rng);
                }
                let th = self.spec.pole.as_slice();
                let along = sum::dot(th, out);
                let boost = (1.0 + lambda).sqrt() - 1.0;
                let sigma = sigma2.sqrt();
                for (x, t) in out.iter_mut().zip(th) {
                    *x = sigma * (*x + boost * along * t);
                }
            }
            _ => {
                let t = self.cosine(rng)?;
                let u = ((1.0 - t) * (1.0 + t)).sqrt();
                // Uniform sign on the sphere orthogonal to e₁, then rotate e₁ to the pole.
                out[0] = 0.0;
                uniform_direction(rng, &mut out[1..]);
                for x in out[1..].iter_mut() {
                    *x *= u;
                }
                out[0] = t;
                self.householder.apply_in_place(out);
            }
        }
        Ok(())
    }

    /// `count` draws, row-major.
    pub fn draw_flat(&self, rng: &mut RngStream, count: usize) -> Result<Vec<f64>> {
        let p = self.spec.dim();
        let mut data = vec![0.0; count * p];
        for row in data.chunks_exact_mut(p) {
            self.draw_into(rng, row)?;
        }
        Ok(data)
    }

    /// `count ≥ 2` draws as a directional sample; spiked draws are projected
    /// onto the sphere.
    pub fn sample_directions(
        &self,
        rng: &mut RngStream,
        count: usize,
    ) -> Result<DirectionalSample> {
        let p = self.spec.dim();
        let mut data = self.draw_flat(rng, count)?;
        if !self.spec.kind.is_directional() {
            for row in data.chunks_exact_mut(p) {
                let norm = sum::norm_sq(row).sqrt();
                if !(norm > DEFAULT_TOL) {
                    return Err(Error::NearZeroVector {
                        norm,
                        tol: DEFAULT_TOL,
                    });
                }
                row.iter_mut().for_each(|x| *x /= norm);
            }
        }
        DirectionalSample::from_flat(p, data)
    }

    /// Radial part `u = √(1 − (X'θ₀)²)` of one draw.
    pub fn radial(&self, rng: &mut RngStream, scratch: &mut [f64]) -> Result<f64> {
        if self.spec.kind.is_directional() {
            let t = self.cosine(rng)?;
            return Ok(((1.0 - t) * (1.0 + t)).sqrt());
        }
        self.draw_into(rng, scratch)?;
        let norm_sq = sum::norm_sq(scratch);
        let along = sum::dot(self.spec.pole.as_slice(), scratch);
        Ok((1.0 - along * along / norm_sq).max(0.0).sqrt())
    }
}

/// Fills `out` with a uniform point of the unit sphere in `R^{out.len()}`.
fn uniform_direction(rng: &mut RngStream, out: &mut [f64]) {
    loop {
        for x in out.iter_mut() {
            *x = StandardNormal.sample(rng);
        }
        let norm = sum::norm_sq(out).sqrt();
        if norm >= 1e-12 {
            out.iter_mut().for_each(|x| *x /= norm);
            return;
        }
    }
}

fn check_count(count: usize) -> Result<()> {
    if count < 2 {
        return Err(Error::InvalidParameter(format!(
            "a directional sample needs count >= 2, got {count}"
        )));
    }
    Ok(())
}

/// Uniform draws on `S^{p−1}` (normalized standard Gaussians).
pub fn sample_uniform_sphere(
    p: usize,
    rng: &mut RngStream,
    count: usize,
) -> Result<DirectionalSample> {
    check_count(count)?;
    Sampler::new(&ModelSpec::about_e1(ModelKind::UniformSphere, p)?)?.sample_directions(rng, count)
}

/// Uniform draws on the unit sphere of the hyperplane orthogonal to `pole`.
pub fn sample_tangent_uniform(
    pole: &UnitVector,
    rng: &mut RngStream,
    count: usize,
) -> Result<Vec<UnitVector>> {
    let sampler = Sampler::new(&ModelSpec::new(ModelKind::TangentUniform, pole.clone())?)?;
    let p = pole.dim();
    sampler.draw_flat(rng, count).map(|flat| {
        flat.chunks_exact(p)
            .map(|r| UnitVector::from_normalized(r.to_vec()))
            .collect()
    })
}

fn directional_draws(
    spec: &ModelSpec,
    expect: fn(&ModelKind) -> bool,
    label: &str,
    rng: &mut RngStream,
    count: usize,
) -> Result<DirectionalSample> {
    if !expect(&spec.kind) {
        return Err(Error::InvalidParameter(format!(
            "expected a {label} model, got {}",
            spec.kind.name()
        )));
    }
    check_count(count)?;
    Sampler::new(spec)?.sample_directions(rng, count)
}

pub fn sample_fvml(
    spec: &ModelSpec,
    rng: &mut RngStream,
    count: usize,
) -> Result<DirectionalSample> {
    directional_draws(
        spec,
        |k| matches!(k, ModelKind::FvML { .. }),
        "fvml",
        rng,
        count,
    )
}

pub fn sample_purkayastha(
    spec: &ModelSpec,
    rng: &mut RngStream,
    count: usize,
) -> Result<DirectionalSample> {
    directional_draws(
        spec,
        |k| matches!(k, ModelKind::Purkayastha { .. }),
        "purkayastha",
        rng,
        count,
    )
}

/// Raw draws `Y = σ(Z + (√(1+λ) − 1)(θ₀'Z)θ₀)`, `cov(Y) = σ²(I + λθ₀θ₀')`.
pub fn sample_spiked_gaussian(
    spec: &ModelSpec,
    rng: &mut RngStream,
    count: usize,
) -> Result<Vec<Vec<f64>>> {
    if !matches!(spec.kind, ModelKind::SpikedGaussian { .. }) {
        return Err(Error::InvalidParameter(format!(
            "expected a spiked model, got {}",
            spec.kind.name()
        )));
    }
    let p = spec.dim();
    let flat = Sampler::new(spec)?.draw_flat(rng, count)?;
    Ok(flat.chunks_exact(p).map(<[f64]>::to_vec).collect())
}

/// Monte Carlo estimate of `E[u^order]`, `order ∈ {1, 2, 4}`.
pub fn radial_moments(
    spec: &ModelSpec,
    order: u32,
    draws: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    if !matches!(order, 1 | 2 | 4) {
        return Err(Error::InvalidParameter(format!(
            "radial moment order must be 1, 2 or 4, got {order}"
        )));
    }
    if draws < 1000 {
        return Err(Error::InvalidParameter(format!(
            "radial moments need at least 1000 draws, got {draws}"
        )));
    }
    let sampler = Sampler::new(spec)?;
    let mut scratch = vec![0.0; spec.dim()];
    let mut acc = NeumaierSum::new();
    for _ in 0..draws {
        acc.add(sampler.radial(rng, &mut scratch)?.powi(order as i32));
    }
    Ok(acc.value() / draws as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameters_are_validated() {
        let e1 = UnitVector::e1(5).unwrap();
        assert!(ModelSpec::new(ModelKind::FvML { kappa: -1.0 }, e1.clone()).is_err());
        assert!(ModelSpec::new(
            ModelKind::SpikedGaussian {
                sigma2: 1.0,
                lambda: 0.0
            },
            e1.clone()
        )
        .is_err());
        assert!(ModelSpec::new(ModelKind::Purkayastha { kappa: f64::NAN }, e1).is_err());
        assert!(ModelSpec::about_e1(ModelKind::FvML { kappa: 1.0 }, 2).is_err());
        assert!(ModelSpec::about_e1(
            ModelKind::SpikedGaussian {
                sigma2: 1.0,
                lambda: 0.5
            },
            2
        )
        .is_ok());
    }

    #[test]
    fn with_dim_reexpresses_e1_only() {
        let spec = ModelSpec::about_e1(ModelKind::FvML { kappa: 2.0 }, 5).unwrap();
        let wider = spec.with_dim(50).unwrap();
        assert_eq!(wider.pole(), &UnitVector::e1(50).unwrap());
        let other =
            ModelSpec::new(ModelKind::UniformSphere, UnitVector::basis(5, 2).unwrap()).unwrap();
        assert!(other.with_dim(6).is_err());
    }

    #[test]
    fn samplers_check_model_kind_and_count() {
        let spec = ModelSpec::about_e1(ModelKind::FvML { kappa: 2.0 }, 5).unwrap();
        let mut rng = RngStream::new(1, 0);
        assert!(sample_purkayastha(&spec, &mut rng, 10).is_err());
        assert!(sample_spiked_gaussian(&spec, &mut rng, 10).is_err());
        assert!(sample_fvml(&spec, &mut rng, 1).is_err());
        assert_eq!(sample_fvml(&spec, &mut rng, 10).unwrap().n(), 10);
    }

    #[test]
    fn draws_are_deterministic_per_stream() {
        let spec = ModelSpec::about_e1(ModelKind::Purkayastha { kappa: 1.0 }, 7).unwrap();
        let a = sample_purkayastha(&spec, &mut RngStream::new(5, 9), 20).unwrap();
        let b = sample_purkayastha(&spec, &mut RngStream::new(5, 9), 20).unwrap();
        let c = sample_purkayastha(&spec, &mut RngStream::new(5, 10), 20).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn radial_moment_arguments_are_checked() {
        let spec = ModelSpec::about_e1(ModelKind::UniformSphere, 5).unwrap();
        let mut rng = RngStream::new(1, 0);
        assert!(radial_moments(&spec, 3, 5000, &mut rng).is_err());
        assert!(radial_moments(&spec, 2, 10, &mut rng).is_err());
    }

    #[test]
    fn tangent_model_has_unit_radial_part() {
        let spec = ModelSpec::about_e1(ModelKind::TangentUniform, 6).unwrap();
        let mut rng = RngStream::new(1, 0);
        assert_eq!(radial_moments(&spec, 4, 1000, &mut rng).unwrap(), 1.0);
    }
}
