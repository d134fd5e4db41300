//! Unit-sphere primitives: validated unit vectors, samples of directions,
//! projection onto the sphere, and the tangent-normal split about a pole.

use crate::error::{Error, Result};
use crate::sum;

/// Default tolerance for near-zero norms and degenerate tangent components.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Tolerance on `|‖x‖ − 1|` accepted by [`UnitVector::new`].
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// A point of the unit sphere `S^{p-1}`, `p ≥ 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Wraps `coords`, checking `p ≥ 2` and `|‖coords‖ − 1| ≤ 1e-12`.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_dim(coords.len())?;
        let norm = sum::norm_sq(&coords).sqrt();
        if !((norm - 1.0).abs() <= UNIT_NORM_TOL) {
            return Err(Error::NotUnitVector {
                index: 0,
                norm,
                tol: UNIT_NORM_TOL,
            });
        }
        Ok(Self(coords))
    }

    /// Canonical basis vector `e_{k+1}` of `R^p` (zero-based `k`).
    pub fn basis(p: usize, k: usize) -> Result<Self> {
        check_dim(p)?;
        if k >= p {
            return Err(Error::InvalidParameter(format!(
                "basis index {k} out of range for p = {p}"
            )));
        }
        let mut coords = vec![0.0; p];
        coords[k] = 1.0;
        Ok(Self(coords))
    }

    /// First canonical basis vector, the `e1` pole shorthand.
    pub fn e1(p: usize) -> Result<Self> {
        Self::basis(p, 0)
    }

    /// Caller guarantees the norm invariant.
    pub(crate) fn from_normalized(coords: Vec<f64>) -> Self {
        debug_assert!((sum::norm_sq(&coords).sqrt() - 1.0).abs() <= 1e-10);
        Self(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        sum::dot(&self.0, other)
    }
}

impl AsRef<[f64]> for UnitVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

fn check_dim(p: usize) -> Result<()> {
    if p < 2 {
        return Err(Error::InvalidParameter(format!(
            "dimension p = {p}; at least 2 is required"
        )));
    }
    Ok(())
}

/// `y / ‖y‖`, failing with [`Error::NearZeroVector`] when `‖y‖ ≤ tol`.
pub fn project_to_sphere(y: &[f64], tol: f64) -> Result<UnitVector> {
    check_dim(y.len())?;
    let norm = sum::norm_sq(y).sqrt();
    if !(norm > tol) {
        return Err(Error::NearZeroVector { norm, tol });
    }
    Ok(UnitVector(y.iter().map(|x| x / norm).collect()))
}

/// `n ≥ 2` directions in a common dimension `p`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalSample {
    p: usize,
    data: Vec<f64>,
}

impl DirectionalSample {
    pub fn new(observations: Vec<UnitVector>) -> Result<Self> {
        let p = observations.first().map(UnitVector::dim).unwrap_or(0);
        let mut data = Vec::with_capacity(observations.len() * p);
        for (index, x) in observations.iter().enumerate() {
            if x.dim() != p {
                return Err(Error::DimensionMismatch {
                    index,
                    expected: p,
                    found: x.dim(),
                });
            }
            data.extend_from_slice(x.as_slice());
        }
        Self::from_flat(p, data)
    }

    /// Builds a sample from raw rows, requiring each row to have unit norm
    /// within `tol` and then renormalizing it exactly.
    pub fn from_rows_normalized(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        let p = rows.first().map(Vec::len).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * p);
        for (index, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    index,
                    expected: p,
                    found: row.len(),
                });
            }
            let norm = sum::norm_sq(row).sqrt();
            if !((norm - 1.0).abs() <= tol) {
                return Err(Error::NotUnitVector { index, norm, tol });
            }
            data.extend(row.iter().map(|x| x / norm));
        }
        Self::from_flat(p, data)
    }

    /// Projects each raw row onto the sphere.
    pub fn from_raw(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        let p = rows.first().map(Vec::len).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * p);
        for (index, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    index,
                    expected: p,
                    found: row.len(),
                });
            }
            data.extend_from_slice(project_to_sphere(row, tol)?.as_slice());
        }
        Self::from_flat(p, data)
    }

    /// Row-major buffer of unit rows; the caller guarantees the norms.
    pub(crate) fn from_flat(p: usize, data: Vec<f64>) -> Result<Self> {
        check_dim(p)?;
        let n = data.len() / p;
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "sample size n = {n}; at least 2 observations are required"
            )));
        }
        Ok(Self { p, data })
    }

    pub fn n(&self) -> usize {
        self.data.len() / self.p
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn observation(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.p)
    }
}

/// Tangent-normal split `Xᵢ = tᵢ·θ₀ + uᵢ·Sᵢ` of every observation.
#[derive(Debug, Clone)]
pub struct TangentDecomposition {
    pub cosines: Vec<f64>,
    pub radial: Vec<f64>,
    signs: Vec<f64>,
    pub pole: UnitVector,
}

impl TangentDecomposition {
    pub fn n(&self) -> usize {
        self.cosines.len()
    }

    pub fn dim(&self) -> usize {
        self.pole.dim()
    }

    /// Sign vector `Sᵢ`, a unit vector orthogonal to the pole.
    pub fn sign(&self, i: usize) -> &[f64] {
        let p = self.dim();
        &self.signs[i * p..(i + 1) * p]
    }

    pub fn signs(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.signs.chunks_exact(self.dim())
    }

    /// `tᵢ·θ₀ + uᵢ·Sᵢ`.
    pub fn reconstruct(&self, i: usize) -> Vec<f64> {
        let (t, u) = (self.cosines[i], self.radial[i]);
        self.pole
            .as_slice()
            .iter()
            .zip(self.sign(i))
            .map(|(th, s)| t * th + u * s)
            .collect()
    }
}

pub fn tangent_normal_decompose(
    sample: &DirectionalSample,
    pole: &UnitVector,
    tol: f64,
) -> Result<TangentDecomposition> {
    let p = sample.dim();
    if pole.dim() != p {
        return Err(Error::DimensionMismatch {
            index: 0,
            expected: p,
            found: pole.dim(),
        });
    }
    let n = sample.n();
    let theta = pole.as_slice();
    let mut cosines = Vec::with_capacity(n);
    let mut radial = Vec::with_capacity(n);
    let mut signs = Vec::with_capacity(n * p);
    let mut residual = vec![0.0; p];
    for (index, x) in sample.iter().enumerate() {
        // Clamped so that inputs normalized to 1 ± 1e-13 never produce NaN.
        let t = sum::dot(x, theta).clamp(-1.0, 1.0);
        for ((r, xi), th) in residual.iter_mut().zip(x).zip(theta) {
            *r = xi - t * th;
        }
        let rnorm = sum::norm_sq(&residual).sqrt();
        if !(rnorm > tol) {
            return Err(Error::DegenerateObservation { index });
        }
        cosines.push(t);
        // Residual norm rather than √(1−t²): accurate when t ≈ ±1.
        radial.push(rnorm);
        signs.extend(residual.iter().map(|r| r / rnorm));
    }
    Ok(TangentDecomposition {
        cosines,
        radial,
        signs,
        pole: pole.clone(),
    })
}

/// Orthogonal involution `H` with `H·e₁ = pole`, applied in `O(p)`.
///
/// `H = I − 2vv'/(v'v)` with `v = e₁ − pole`; the first coordinate of `v` is
/// formed without cancellation when the pole is close to `e₁`.
#[derive(Debug, Clone)]
pub struct Householder {
    v: Vec<f64>,
    scale: f64,
}

impl Householder {
    pub fn to_pole(pole: &UnitVector) -> Self {
        let th = pole.as_slice();
        let tail_sq = sum::norm_sq(&th[1..]);
        let head = if th[0] > 0.0 {
            tail_sq / (1.0 + th[0])
        } else {
            1.0 - th[0]
        };
        let mut v = Vec::with_capacity(th.len());
        v.push(head);
        v.extend(th[1..].iter().map(|x| -x));
        let vv = head * head + tail_sq;
        let scale = if vv > 0.0 { 2.0 / vv } else { 0.0 };
        Self { v, scale }
    }

    pub fn is_identity(&self) -> bool {
        self.scale == 0.0
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn apply_in_place(&self, x: &mut [f64]) {
        if self.is_identity() {
            return;
        }
        let k = self.scale * sum::dot(&self.v, x);
        for (xi, vi) in x.iter_mut().zip(&self.v) {
            *xi -= k * vi;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.apply_in_place(&mut out);
        out
    }
}

pub fn householder_to_pole(pole: &UnitVector) -> Householder {
    Householder::to_pole(pole)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn projects_basis_multiple() {
        let x = project_to_sphere(&[3.0, 0.0, 0.0, 0.0], DEFAULT_TOL).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn projects_diagonal() {
        let x = project_to_sphere(&[1.0, 1.0, 0.0, 0.0], DEFAULT_TOL).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(x.as_slice(), &[h, h, 0.0, 0.0], 1e-15));
    }

    #[test]
    fn zero_vector_is_rejected() {
        let err = project_to_sphere(&[0.0; 4], DEFAULT_TOL).unwrap_err();
        assert!(matches!(err, Error::NearZeroVector { .. }));
    }

    #[test]
    fn unit_vector_rejects_wrong_norm_and_dimension() {
        assert!(UnitVector::new(vec![1.0, 1e-5]).is_err());
        assert!(UnitVector::new(vec![1.0]).is_err());
        assert!(UnitVector::new(vec![0.6, 0.8]).is_ok());
    }

    #[test]
    fn sample_requires_two_observations_of_equal_dimension() {
        let e1 = UnitVector::e1(3).unwrap();
        assert!(DirectionalSample::new(vec![e1.clone()]).is_err());
        let e1_4 = UnitVector::e1(4).unwrap();
        assert!(matches!(
            DirectionalSample::new(vec![e1, e1_4]),
            Err(Error::DimensionMismatch { index: 1, .. })
        ));
    }

    #[test]
    fn decomposes_orthogonal_observation() {
        let sample = DirectionalSample::new(vec![
            UnitVector::basis(3, 1).unwrap(),
            UnitVector::basis(3, 2).unwrap(),
        ])
        .unwrap();
        let d =
            tangent_normal_decompose(&sample, &UnitVector::e1(3).unwrap(), DEFAULT_TOL).unwrap();
        assert_eq!(d.cosines[0], 0.0);
        assert_eq!(d.radial[0], 1.0);
        assert_eq!(d.sign(0), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn decomposes_diagonal_observation() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let x = UnitVector::new(vec![h, h, 0.0]).unwrap();
        let sample = DirectionalSample::new(vec![x.clone(), x]).unwrap();
        let d =
            tangent_normal_decompose(&sample, &UnitVector::e1(3).unwrap(), DEFAULT_TOL).unwrap();
        assert!((d.cosines[0] - h).abs() < 1e-15);
        assert!((d.radial[0] - h).abs() < 1e-15);
        assert!(close(d.sign(0), &[0.0, 1.0, 0.0], 1e-15));
    }

    #[test]
    fn observation_at_pole_is_degenerate() {
        let e1 = UnitVector::e1(3).unwrap();
        let sample =
            DirectionalSample::new(vec![UnitVector::basis(3, 1).unwrap(), e1.clone()]).unwrap();
        assert_eq!(
            tangent_normal_decompose(&sample, &e1, DEFAULT_TOL).unwrap_err(),
            Error::DegenerateObservation { index: 1 }
        );
        let anti = UnitVector::new(vec![-1.0, 0.0, 0.0]).unwrap();
        let sample = DirectionalSample::new(vec![anti, UnitVector::basis(3, 1).unwrap()]).unwrap();
        assert_eq!(
            tangent_normal_decompose(&sample, &e1, DEFAULT_TOL).unwrap_err(),
            Error::DegenerateObservation { index: 0 }
        );
    }

    #[test]
    fn cosines_drifting_past_one_are_clamped() {
        let rows = [vec![1.0 + 1e-13, 1e-3, 0.0], vec![0.0, 1.0, 0.0]];
        let sample = DirectionalSample {
            p: 3,
            data: rows.concat(),
        };
        let d =
            tangent_normal_decompose(&sample, &UnitVector::e1(3).unwrap(), DEFAULT_TOL).unwrap();
        assert!(d.cosines[0] <= 1.0);
        assert!(d.radial[0].is_finite());
    }

    #[test]
    fn householder_identity_for_e1() {
        let h = householder_to_pole(&UnitVector::e1(4).unwrap());
        assert!(h.is_identity());
        assert_eq!(h.apply(&[0.1, 0.2, 0.3, 0.4]), vec![0.1, 0.2, 0.3, 0.4]);
    }

    #[test]
    fn householder_swaps_in_the_plane() {
        let h = householder_to_pole(&UnitVector::basis(2, 1).unwrap());
        assert!(close(&h.apply(&[1.0, 0.0]), &[0.0, 1.0], 1e-15));
        assert!(close(&h.apply(&[0.0, 1.0]), &[1.0, 0.0], 1e-15));
    }

    #[test]
    fn householder_handles_antipode() {
        let pole = UnitVector::new(vec![-1.0, 0.0, 0.0]).unwrap();
        let h = householder_to_pole(&pole);
        assert!(close(&h.apply(&[1.0, 0.0, 0.0]), pole.as_slice(), 1e-15));
    }

    fn unit_strategy(p: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-1.0f64..1.0, p)
            .prop_filter("non-degenerate", |v| sum::norm_sq(v) > 1e-3)
            .prop_map(|v| project_to_sphere(&v, DEFAULT_TOL).unwrap().into_inner())
    }

    /// Random orthogonal map fixing `pole`: a product of reflections whose
    /// normals are orthogonal to the pole.
    fn rotation_fixing(pole: &[f64], normals: &[Vec<f64>]) -> impl Fn(&[f64]) -> Vec<f64> {
        let ws: Vec<Vec<f64>> = normals
            .iter()
            .map(|w| {
                let c = sum::dot(w, pole);
                w.iter()
                    .zip(pole)
                    .map(|(a, b)| a - c * b)
                    .collect::<Vec<f64>>()
            })
            .filter(|w| sum::norm_sq(w) > 1e-6)
            .collect();
        move |x: &[f64]| {
            let mut y = x.to_vec();
            for w in &ws {
                let k = 2.0 * sum::dot(w, &y) / sum::norm_sq(w);
                for (yi, wi) in y.iter_mut().zip(w) {
                    *yi -= k * wi;
                }
            }
            y
        }
    }

    proptest! {
        #[test]
        fn householder_maps_e1_to_pole_and_is_involution(
            pole in unit_strategy(6),
            v in proptest::collection::vec(-5.0f64..5.0, 6),
        ) {
            let pole = UnitVector::new(pole).unwrap();
            let h = householder_to_pole(&pole);
            let mut e1 = vec![0.0; 6];
            e1[0] = 1.0;
            prop_assert!(close(&h.apply(&e1), pole.as_slice(), 1e-14));
            prop_assert!(close(&h.apply(&h.apply(&v)), &v, 1e-13));
        }

        #[test]
        fn projection_is_scale_invariant(
            y in proptest::collection::vec(-10.0f64..10.0, 5),
            c in 1e-3f64..1e3,
        ) {
            prop_assume!(sum::norm_sq(&y) > 1e-6);
            let a = project_to_sphere(&y, DEFAULT_TOL).unwrap();
            let scaled: Vec<f64> = y.iter().map(|x| c * x).collect();
            let b = project_to_sphere(&scaled, DEFAULT_TOL).unwrap();
            prop_assert!(close(a.as_slice(), b.as_slice(), 1e-12));
        }

        #[test]
        fn decomposition_reconstructs_and_is_orthogonal(
            rows in proptest::collection::vec(unit_strategy(5), 2..12),
            pole in unit_strategy(5),
        ) {
            let sample = DirectionalSample::from_flat(5, rows.concat()).unwrap();
            let pole = UnitVector::new(pole).unwrap();
            let d = match tangent_normal_decompose(&sample, &pole, DEFAULT_TOL) {
                Ok(d) => d,
                Err(_) => return Ok(()),
            };
            for i in 0..d.n() {
                let (t, u) = (d.cosines[i], d.radial[i]);
                prop_assert!((u * u + t * t - 1.0).abs() <= 1e-10);
                prop_assert!(sum::dot(d.sign(i), pole.as_slice()).abs() <= 1e-10);
                prop_assert!(close(&d.reconstruct(i), sample.observation(i), 1e-10));
            }
        }

        #[test]
        fn decomposition_is_rotation_equivariant(
            rows in proptest::collection::vec(unit_strategy(5), 2..10),
            pole in unit_strategy(5),
            normals in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 5), 1..4),
        ) {
            let pole = UnitVector::new(pole).unwrap();
            let rot = rotation_fixing(pole.as_slice(), &normals);
            let sample = DirectionalSample::from_flat(5, rows.concat()).unwrap();
            let rotated = DirectionalSample::from_flat(
                5,
                sample.iter().flat_map(&rot).collect(),
            ).unwrap();
            let (a, b) = match (
                tangent_normal_decompose(&sample, &pole, DEFAULT_TOL),
                tangent_normal_decompose(&rotated, &pole, DEFAULT_TOL),
            ) {
                (Ok(a), Ok(b)) => (a, b),
                _ => return Ok(()),
            };
            for i in 0..a.n() {
                prop_assert!((a.cosines[i] - b.cosines[i]).abs() <= 1e-10);
                prop_assert!((a.radial[i] - b.radial[i]).abs() <= 1e-10);
                prop_assert!(close(&rot(a.sign(i)), b.sign(i), 1e-10));
            }
        }
    }
}
