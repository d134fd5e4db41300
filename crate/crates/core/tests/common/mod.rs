#![allow(dead_code)]

use hdwatson::RngStream;
use rand::Rng;

/// Cosine law of a rotationally symmetric distribution, integrated in the
/// angle `φ = arccos t` where the density is `sin^{p−2}φ · w(cos φ, φ)`.
pub struct CosineOracle {
    phi: Vec<f64>,
    /// `P(angle ≤ φ_k)`, cumulative trapezoid.
    cum: Vec<f64>,
    log_density: Vec<f64>,
}

impl CosineOracle {
    const POINTS: usize = 400_001;

    pub fn new(p: usize, log_weight: impl Fn(f64, f64) -> f64) -> Self {
        let h = std::f64::consts::PI / (Self::POINTS - 1) as f64;
        let phi: Vec<f64> = (0..Self::POINTS).map(|k| k as f64 * h).collect();
        let log_density: Vec<f64> = phi
            .iter()
            .map(|&f| {
                let s = f.sin();
                let base = if s > 0.0 {
                    (p as f64 - 2.0) * s.ln()
                } else if p == 2 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                };
                base + log_weight(f.cos(), f)
            })
            .collect();
        let top = log_density
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let dens: Vec<f64> = log_density.iter().map(|l| (l - top).exp()).collect();
        let mut cum = vec![0.0; Self::POINTS];
        for k in 1..Self::POINTS {
            cum[k] = cum[k - 1] + 0.5 * h * (dens[k - 1] + dens[k]);
        }
        let total = cum[Self::POINTS - 1];
        cum.iter_mut().for_each(|c| *c /= total);
        Self {
            phi,
            cum,
            log_density,
        }
    }

    pub fn fvml(p: usize, kappa: f64) -> Self {
        Self::new(p, move |t, _| kappa * t)
    }

    pub fn purkayastha(p: usize, kappa: f64) -> Self {
        Self::new(p, move |_, phi| -kappa * phi)
    }

    pub fn uniform(p: usize) -> Self {
        Self::new(p, |_, _| 0.0)
    }

    /// `E[g(t)]` by Simpson's rule in the angle.
    pub fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        let top = self
            .log_density
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let (mut num, mut den) = (0.0, 0.0);
        let last = self.phi.len() - 1;
        for (k, (&f, &l)) in self.phi.iter().zip(&self.log_density).enumerate() {
            let w = if k == 0 || k == last {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let d = w * (l - top).exp();
            num += d * g(f.cos());
            den += d;
        }
        num / den
    }

    /// `P(T ≤ t)` for the cosine `T`.
    pub fn cdf(&self, t: f64) -> f64 {
        let f = t.clamp(-1.0, 1.0).acos();
        let h = self.phi[1];
        let x = f / h;
        let k = (x.floor() as usize).min(self.phi.len() - 2);
        let frac = x - k as f64;
        1.0 - (self.cum[k] + frac * (self.cum[k + 1] - self.cum[k]))
    }
}

/// Kolmogorov–Smirnov distance between `values` and a continuous CDF.
pub fn ks(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Box–Muller standard normals, independent of the library's samplers.
pub fn gaussians(rng: &mut RngStream, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count + 1);
    while out.len() < count {
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random();
        let r = (-2.0 * u1.ln()).sqrt();
        let a = std::f64::consts::TAU * u2;
        out.push(r * a.cos());
        out.push(r * a.sin());
    }
    out.truncate(count);
    out
}

/// A uniformly random unit vector in `R^p`.
pub fn random_unit(rng: &mut RngStream, p: usize) -> Vec<f64> {
    loop {
        let z = gaussians(rng, p);
        let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return z.into_iter().map(|x| x / norm).collect();
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// `Φ(x)` by Simpson integration of the density from 0, independent of erf.
pub fn normal_cdf_by_quadrature(x: f64) -> f64 {
    let n = 20_000;
    let h = x / n as f64;
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = phi(0.0) + phi(x);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * phi(k as f64 * h);
    }
    0.5 + s * h / 3.0
}

/// Root of an increasing function by plain bisection.
pub fn bisect(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
