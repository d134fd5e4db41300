//! Compensated (Neumaier) accumulation.
//!
//! The statistics reduce `n·p` products into a handful of scalars; with `n`
//! and `p` up to 10⁴ a plain running sum loses several digits, which matters
//! because the pairwise U-statistic is a difference of two nearly equal sums.

/// Running sum with Neumaier's compensation term.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Folds another accumulator into this one.
    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<NeumaierSum>().value()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum(a.iter().zip(b).map(|(x, y)| x * y))
}

pub fn norm_sq(a: &[f64]) -> f64 {
    sum(a.iter().map(|x| x * x))
}

/// Coordinatewise compensated accumulator for sums of p-vectors.
#[derive(Debug, Clone)]
pub struct VectorSum {
    coords: Vec<NeumaierSum>,
}

impl VectorSum {
    pub fn zeros(p: usize) -> Self {
        Self {
            coords: vec![NeumaierSum::new(); p],
        }
    }

    /// Adds `scale * v`.
    #[inline]
    pub fn add_scaled(&mut self, scale: f64, v: &[f64]) {
        debug_assert_eq!(v.len(), self.coords.len());
        for (acc, x) in self.coords.iter_mut().zip(v) {
            acc.add(scale * x);
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.coords.iter().map(NeumaierSum::value).collect()
    }
}
