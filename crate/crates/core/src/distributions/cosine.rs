//! Samplers for the cosine `t = X'θ₀` of rotationally symmetric laws.
//!
//! Every cosine density has the form `(1−t²)^{(p−3)/2}·exp(h(t))` on
//! `[−1, 1]`; it is always evaluated in log space.

use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};

/// Proposal cap per draw for rejection samplers.
pub const MAX_PROPOSALS: u64 = 1_000_000;

/// Knots in the inverse-CDF table.
pub const TABLE_KNOTS: usize = 4097;

/// Log of the unnormalized cosine density; `-inf` off the support.
pub fn log_density(p: usize, tilt: Tilt, t: f64) -> f64 {
    if !(-1.0..=1.0).contains(&t) {
        return f64::NEG_INFINITY;
    }
    let shape = 0.5 * (p as f64 - 3.0);
    let base = if shape == 0.0 {
        0.0
    } else {
        shape * ((1.0 - t) * (1.0 + t)).ln()
    };
    base + tilt.log_weight(t)
}

/// The `h(t)` factor of a cosine density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tilt {
    /// `h = 0`: uniform on the sphere.
    Flat,
    /// `h = κ t`: Fisher-von Mises-Langevin.
    Exponential(f64),
    /// `h = −κ arccos t`: Purkayastha.
    Angular(f64),
}

impl Tilt {
    #[inline]
    pub fn log_weight(self, t: f64) -> f64 {
        match self {
            Tilt::Flat => 0.0,
            Tilt::Exponential(kappa) => kappa * t,
            Tilt::Angular(kappa) => -kappa * t.clamp(-1.0, 1.0).acos(),
        }
    }
}

/// Wood's envelope-rejection sampler for the FvML cosine in dimension `p`.
#[derive(Debug, Clone)]
pub struct FvmlCosine {
    kappa: f64,
    dim_m1: f64,
    b: f64,
    x0: f64,
    c: f64,
    beta: Beta<f64>,
}

impl FvmlCosine {
    pub fn new(p: usize, kappa: f64) -> Result<Self> {
        if p < 2 || !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "FvML cosine needs p >= 2 and finite kappa > 0 (p = {p}, kappa = {kappa})"
            )));
        }
        let m1 = p as f64 - 1.0;
        let s = (4.0 * kappa * kappa + m1 * m1).sqrt();
        let b = m1 / (2.0 * kappa + s);
        // (1 − b)/(1 + b) without the cancellation in s − (p−1).
        let x0 = (2.0 * kappa + 4.0 * kappa * kappa / (s + m1)) / (2.0 * kappa + s + m1);
        let c = kappa * x0 + m1 * (-x0 * x0).ln_1p();
        let beta = Beta::new(0.5 * m1, 0.5 * m1)
            .map_err(|e| Error::InvalidParameter(format!("beta envelope: {e}")))?;
        Ok(Self {
            kappa,
            dim_m1: m1,
            b,
            x0,
            c,
            beta,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        for _ in 0..MAX_PROPOSALS {
            let z = self.beta.sample(rng);
            let w = (1.0 - (1.0 + self.b) * z) / (1.0 - (1.0 - self.b) * z);
            let u: f64 = rng.random();
            let lhs = self.kappa * w + self.dim_m1 * (-self.x0 * w).ln_1p() - self.c;
            if lhs >= u.ln() {
                return Ok(w.clamp(-1.0, 1.0));
            }
        }
        Err(Error::SamplerStalled {
            proposals: MAX_PROPOSALS,
        })
    }
}

/// Cosine law tabulated on a knot grid, with a monotone cubic Hermite CDF
/// used for both evaluation and inversion.
#[derive(Debug, Clone)]
pub struct TabulatedCosineLaw {
    knots: Vec<f64>,
    cdf: Vec<f64>,
    slopes: Vec<f64>,
}

/// Log-density drop defining the tabulated support; mass beyond is < e^{-60}.
const SUPPORT_LOG_DROP: f64 = 60.0;
const LOCAL_CDF_TOL: f64 = 1e-9;

impl TabulatedCosineLaw {
    pub fn new(p: usize, tilt: Tilt) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidParameter(format!(
                "cosine law needs p >= 2, got {p}"
            )));
        }
        match tilt {
            Tilt::Exponential(k) | Tilt::Angular(k) if !(k >= 0.0 && k.is_finite()) => {
                return Err(Error::TabulationFailed(format!(
                    "concentration {k} is not a finite non-negative number"
                )))
            }
            _ => {}
        }
        let logf = |t: f64| log_density(p, tilt, t);

        // Coarse scan for the mode; the densities handled here are unimodal.
        let coarse = 8192;
        let (mut mode, mut log_max) = (0.0, f64::NEG_INFINITY);
        for k in 0..=coarse {
            let t = -1.0 + 2.0 * k as f64 / coarse as f64;
            let v = logf(t);
            if v > log_max {
                log_max = v;
                mode = t;
            }
        }
        if !log_max.is_finite() {
            return Err(Error::TabulationFailed(format!(
                "log-density maximum is not finite (p = {p}, {tilt:?})"
            )));
        }
        let threshold = log_max - SUPPORT_LOG_DROP;
        let lo = edge(&logf, mode, -1.0, threshold);
        let hi = edge(&logf, mode, 1.0, threshold);
        if !(hi > lo) {
            return Err(Error::TabulationFailed(format!(
                "empty support [{lo}, {hi}] (p = {p}, {tilt:?})"
            )));
        }

        let dens = |t: f64| (logf(t) - log_max).exp();
        let h = (hi - lo) / (TABLE_KNOTS - 1) as f64;
        let knots: Vec<f64> = (0..TABLE_KNOTS)
            .map(|k| {
                if k + 1 == TABLE_KNOTS {
                    hi
                } else {
                    lo + k as f64 * h
                }
            })
            .collect();
        // Rough total from the trapezoid rule sets the absolute Simpson tolerance.
        let rough: f64 = knots
            .windows(2)
            .map(|w| 0.5 * (dens(w[0]) + dens(w[1])) * (w[1] - w[0]))
            .sum();
        if !(rough > 0.0 && rough.is_finite()) {
            return Err(Error::TabulationFailed(format!(
                "normalizer underflowed (p = {p}, {tilt:?})"
            )));
        }
        let eps = LOCAL_CDF_TOL * rough / (TABLE_KNOTS - 1) as f64;
        let mut cdf = Vec::with_capacity(TABLE_KNOTS);
        cdf.push(0.0);
        let mut acc = 0.0;
        for w in knots.windows(2) {
            acc += adaptive_simpson(&dens, w[0], w[1], eps, 40);
            cdf.push(acc);
        }
        let total = acc;
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::TabulationFailed(format!(
                "normalizer underflowed (p = {p}, {tilt:?})"
            )));
        }
        for v in cdf.iter_mut() {
            *v /= total;
        }
        *cdf.last_mut().unwrap() = 1.0;
        let mut slopes: Vec<f64> = knots.iter().map(|&t| dens(t) / total).collect();
        fritsch_carlson(&knots, &cdf, &mut slopes);
        Ok(Self { knots, cdf, slopes })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    fn segment(&self, k: usize) -> Segment {
        let h = self.knots[k + 1] - self.knots[k];
        Segment {
            f0: self.cdf[k],
            f1: self.cdf[k + 1],
            m0: self.slopes[k] * h,
            m1: self.slopes[k + 1] * h,
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        let (lo, hi) = self.support();
        if t <= lo {
            return 0.0;
        }
        if t >= hi {
            return 1.0;
        }
        let k = self.knots.partition_point(|&x| x <= t).saturating_sub(1);
        let k = k.min(self.knots.len() - 2);
        let h = self.knots[k + 1] - self.knots[k];
        self.segment(k).eval((t - self.knots[k]) / h)
    }

    /// Inverse CDF at `u ∈ [0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let k = self.cdf.partition_point(|&c| c <= u).saturating_sub(1);
        let k = k.min(self.knots.len() - 2);
        let seg = self.segment(k);
        let h = self.knots[k + 1] - self.knots[k];
        let s = seg.invert(u);
        (self.knots[k] + s * h).clamp(-1.0, 1.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random())
    }
}

/// Cubic Hermite piece on `s ∈ [0, 1]` with end values and scaled slopes.
struct Segment {
    f0: f64,
    f1: f64,
    m0: f64,
    m1: f64,
}

impl Segment {
    fn eval(&self, s: f64) -> f64 {
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.f0
            + (s3 - 2.0 * s2 + s) * self.m0
            + (-2.0 * s3 + 3.0 * s2) * self.f1
            + (s3 - s2) * self.m1
    }

    fn deriv(&self, s: f64) -> f64 {
        let s2 = s * s;
        (6.0 * s2 - 6.0 * s) * self.f0
            + (3.0 * s2 - 4.0 * s + 1.0) * self.m0
            + (-6.0 * s2 + 6.0 * s) * self.f1
            + (3.0 * s2 - 2.0 * s) * self.m1
    }

    /// Solves `eval(s) = u` on the monotone piece (safeguarded Newton).
    fn invert(&self, u: f64) -> f64 {
        if self.f1 <= self.f0 {
            return 0.5;
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut s = ((u - self.f0) / (self.f1 - self.f0)).clamp(0.0, 1.0);
        for _ in 0..60 {
            let r = self.eval(s) - u;
            if r > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let d = self.deriv(s);
            let mut next = if d > 0.0 { s - r / d } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - s).abs() <= 1e-15 {
                return next;
            }
            s = next;
        }
        s
    }
}

/// Outermost point between `mode` and `end` where the log-density is still
/// above `threshold` (bisection on the monotone flank).
fn edge(logf: &impl Fn(f64) -> f64, mode: f64, end: f64, threshold: f64) -> f64 {
    if logf(end) >= threshold {
        return end;
    }
    let (mut inside, mut outside) = (mode, end);
    for _ in 0..100 {
        let mid = 0.5 * (inside + outside);
        if logf(mid) >= threshold {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    outside
}

fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Adaptive Simpson quadrature with absolute tolerance `eps`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, eps: f64, depth: u32) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(fa, fm, fb, a, b);
    simpson_step(f, a, b, fa, fm, fb, whole, eps, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(fa, flm, fm, a, m);
    let right = simpson(fm, frm, fb, m, b);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)
}

/// Limits knot slopes so every Hermite piece is monotone.
fn fritsch_carlson(x: &[f64], y: &[f64], d: &mut [f64]) {
    for k in 0..x.len() - 1 {
        let delta = (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
        if delta <= 0.0 {
            d[k] = 0.0;
            d[k + 1] = 0.0;
            continue;
        }
        let a = d[k] / delta;
        let b = d[k + 1] / delta;
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            d[k] = tau * a * delta;
            d[k + 1] = tau * b * delta;
        }
    }
}
