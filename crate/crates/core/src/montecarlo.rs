//! Monte Carlo harness for the null laws.
//!
//! Each `(cell, replicate)` pair owns the random stream
//! `stream_id = cell_index·2³² + replicate`, replicates run in parallel, and
//! every aggregate is reduced sequentially in replicate order. Results are
//! therefore bit-identical for a given seed at any thread count.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::distributions::{ModelKind, ModelSpec, RngStream, Sampler};
use crate::error::{Error, Result};
use crate::inference::{self, ReferenceLaw};
use crate::sphere::{self, DirectionalSample};
use crate::statistics::{self, StatisticKind};
use crate::sum::NeumaierSum;

pub const DEFAULT_BINS: usize = 41;
pub const DEFAULT_BIN_RANGE: (f64, f64) = (-4.0, 4.0);
pub const DEFAULT_REPLICATES: usize = 2500;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub model: ModelSpec,
    pub grid: Vec<(usize, usize)>,
    pub replicates: usize,
    pub methods: Vec<StatisticKind>,
    pub alpha: f64,
    pub seed: u64,
    pub bins: usize,
    pub bin_range: (f64, f64),
}

impl SimulationConfig {
    /// Config with the default replicate count, level and binning.
    pub fn new(
        model: ModelSpec,
        grid: Vec<(usize, usize)>,
        methods: Vec<StatisticKind>,
        seed: u64,
    ) -> Self {
        Self {
            model,
            grid,
            replicates: DEFAULT_REPLICATES,
            methods,
            alpha: 0.05,
            seed,
            bins: DEFAULT_BINS,
            bin_range: DEFAULT_BIN_RANGE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.grid.is_empty() {
            return bad("grid is empty".into());
        }
        if let Some(&(n, p)) = self.grid.iter().find(|&&(n, p)| n < 2 || p < 3) {
            return bad(format!("grid cell (n={n}, p={p}) needs n >= 2 and p >= 3"));
        }
        if self.grid.len() > u32::MAX as usize || self.replicates > u32::MAX as usize {
            return bad("grid or replicate count exceeds 2^32".into());
        }
        if self.replicates == 0 {
            return bad("replicates must be >= 1".into());
        }
        if self.methods.is_empty() {
            return bad("no statistic requested".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.bins < 5 {
            return bad(format!("bins must be >= 5, got {}", self.bins));
        }
        let (lo, hi) = self.bin_range;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return bad(format!("bin range ({lo}, {hi}) must satisfy lo < hi"));
        }
        Ok(())
    }

    /// Requested methods, deduplicated, in canonical order.
    fn methods(&self) -> Vec<StatisticKind> {
        let mut m = self.methods.clone();
        m.sort();
        m.dedup();
        m
    }
}

/// Counts over equal-width bins plus one overflow bin on each side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    lo: u64,
    hi: u64,
    pub underflow: u64,
    pub counts: Vec<u64>,
    pub overflow: u64,
}

impl Histogram {
    pub fn new(bins: usize, range: (f64, f64)) -> Self {
        Self {
            lo: range.0.to_bits(),
            hi: range.1.to_bits(),
            underflow: 0,
            counts: vec![0; bins],
            overflow: 0,
        }
    }

    pub fn range(&self) -> (f64, f64) {
        (f64::from_bits(self.lo), f64::from_bits(self.hi))
    }

    /// `[bin_lo, bin_hi)` edges of interior bin `k`.
    pub fn edges(&self, k: usize) -> (f64, f64) {
        let (lo, hi) = self.range();
        let w = (hi - lo) / self.counts.len() as f64;
        let right = if k + 1 == self.counts.len() {
            hi
        } else {
            lo + (k + 1) as f64 * w
        };
        (lo + k as f64 * w, right)
    }

    /// Values below the range go to `underflow`; values at or above the upper
    /// edge (and NaN) go to `overflow`.
    pub fn add(&mut self, x: f64) {
        let (lo, hi) = self.range();
        if x < lo {
            self.underflow += 1;
        } else if x >= hi || x.is_nan() {
            self.overflow += 1;
        } else {
            let bins = self.counts.len();
            let k = (((x - lo) / (hi - lo)) * bins as f64) as usize;
            self.counts[k.min(bins - 1)] += 1;
        }
    }

    pub fn from_values(values: &[f64], bins: usize, range: (f64, f64)) -> Self {
        let mut h = Self::new(bins, range);
        values.iter().for_each(|&x| h.add(x));
        h
    }

    pub fn total(&self) -> u64 {
        self.underflow + self.overflow + self.counts.iter().sum::<u64>()
    }
}

/// Value on the standard-normal scale: `(W − (p−1))/√(2(p−1))` for the
/// classical statistic, the value itself otherwise.
pub fn standardized(kind: StatisticKind, p: usize, value: f64) -> f64 {
    match kind {
        StatisticKind::ClassicalWatson => {
            let df = p as f64 - 1.0;
            (value - df) / (2.0 * df).sqrt()
        }
        _ => value,
    }
}

/// Kolmogorov-Smirnov sup-distance between the empirical CDF of `values` and
/// `reference`, exact over the sorted sample.
pub fn ks_distance(values: &[f64], reference: ReferenceLaw) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = reference.cdf(x);
            ((i + 1) as f64 / m - f).max(f - i as f64 / m)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: StatisticKind,
    pub reference: ReferenceLaw,
    pub mean: f64,
    pub variance: f64,
    /// KS distance of the standardized values to N(0, 1).
    pub ks_normal: f64,
    /// KS distance of the raw values to the method's reference law.
    pub ks_reference: f64,
    pub critical_value: f64,
    pub empirical_size: f64,
    /// Histogram of the standardized values.
    pub histogram: Histogram,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionRatios {
    /// `E[u⁴]/(E[u²])²`.
    pub fourth_over_second_sq: f64,
    /// `E[u²]/(E[u])²`.
    pub second_over_first_sq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub n: usize,
    pub p: usize,
    pub values: BTreeMap<StatisticKind, Vec<f64>>,
    pub summaries: Vec<MethodSummary>,
    /// Mean `|W̃ₙ − S̃ₙ|` when both statistics were requested.
    pub equivalence: Option<f64>,
    pub condition_ratios: ConditionRatios,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub config: SimulationConfig,
    pub cells: Vec<CellResult>,
}

struct Replicate {
    values: Vec<f64>,
    radial: [NeumaierSum; 3],
}

/// Stream for replicate `r` of cell `c`.
pub fn stream_id(cell: usize, replicate: usize) -> u64 {
    ((cell as u64) << 32) | replicate as u64
}

fn run_replicate(
    sampler: &Sampler,
    methods: &[StatisticKind],
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<Replicate> {
    let mut rng = RngStream::new(seed, stream);
    let sample: DirectionalSample = sampler.sample_directions(&mut rng, n)?;
    let pole = sampler.spec().pole();
    let d = sphere::tangent_normal_decompose(&sample, pole, sphere::DEFAULT_TOL)?;
    let mut modified = None;
    let values = methods
        .iter()
        .map(|kind| {
            Ok(match kind {
                StatisticKind::ClassicalWatson => {
                    statistics::watson_classical(&sample, pole)?.value
                }
                StatisticKind::Sign => statistics::sign_from_decomposition(&d).value,
                StatisticKind::ModifiedWatson | StatisticKind::SpikedWatson => match modified {
                    Some(v) => v,
                    None => {
                        let v = statistics::modified_from_decomposition(&d)?.value;
                        modified = Some(v);
                        v
                    }
                },
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut radial = [NeumaierSum::new(); 3];
    for &u in &d.radial {
        radial[0].add(u);
        radial[1].add(u * u);
        radial[2].add(u * u * u * u);
    }
    Ok(Replicate { values, radial })
}

fn mean_variance(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().copied().collect::<NeumaierSum>().value() / m;
    let ss = values
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .collect::<NeumaierSum>()
        .value();
    let variance = if values.len() > 1 {
        ss / (m - 1.0)
    } else {
        0.0
    };
    (mean, variance)
}

fn summarize(
    kind: StatisticKind,
    p: usize,
    values: &[f64],
    config: &SimulationConfig,
) -> Result<MethodSummary> {
    let reference = ReferenceLaw::for_statistic(kind, p);
    let critical_value = inference::critical_value(kind, p, config.alpha)?;
    let standardized: Vec<f64> = values.iter().map(|&v| standardized(kind, p, v)).collect();
    let (mean, variance) = mean_variance(values);
    let rejected = values.iter().filter(|&&v| v > critical_value).count();
    Ok(MethodSummary {
        method: kind,
        reference,
        mean,
        variance,
        ks_normal: ks_distance(&standardized, ReferenceLaw::Normal),
        ks_reference: ks_distance(values, reference),
        critical_value,
        empirical_size: rejected as f64 / values.len() as f64,
        histogram: Histogram::from_values(&standardized, config.bins, config.bin_range),
    })
}

fn run_cell(
    config: &SimulationConfig,
    methods: &[StatisticKind],
    cell: usize,
) -> Result<CellResult> {
    let (n, p) = config.grid[cell];
    let spec = config.model.with_dim(p)?;
    let sampler = Sampler::new(&spec)?;
    let outputs: Vec<Result<Replicate>> = (0..config.replicates)
        .into_par_iter()
        .map(|r| run_replicate(&sampler, methods, n, config.seed, stream_id(cell, r)))
        .collect();
    let mut replicates = Vec::with_capacity(outputs.len());
    for (replicate, out) in outputs.into_iter().enumerate() {
        match out {
            Ok(rep) => replicates.push(rep),
            Err(e) => {
                return Err(Error::Replicate {
                    cell,
                    n,
                    p,
                    replicate,
                    source: Box::new(e),
                })
            }
        }
    }

    let mut values = BTreeMap::new();
    for (j, &kind) in methods.iter().enumerate() {
        values.insert(
            kind,
            replicates.iter().map(|r| r.values[j]).collect::<Vec<f64>>(),
        );
    }
    let summaries = methods
        .iter()
        .map(|kind| summarize(*kind, p, &values[kind], config))
        .collect::<Result<Vec<_>>>()?;
    let equivalence = match (
        values.get(&StatisticKind::ModifiedWatson),
        values.get(&StatisticKind::Sign),
    ) {
        (Some(w), Some(s)) => Some(
            w.iter()
                .zip(s)
                .map(|(a, b)| (a - b).abs())
                .collect::<NeumaierSum>()
                .value()
                / w.len() as f64,
        ),
        _ => None,
    };
    let mut moments = [NeumaierSum::new(); 3];
    for rep in &replicates {
        for (acc, part) in moments.iter_mut().zip(&rep.radial) {
            acc.merge(part);
        }
    }
    let count = (n * config.replicates) as f64;
    let [m1, m2, m4] = moments.map(|m| m.value() / count);
    Ok(CellResult {
        n,
        p,
        values,
        summaries,
        equivalence,
        condition_ratios: ConditionRatios {
            fourth_over_second_sq: m4 / (m2 * m2),
            second_over_first_sq: m2 / (m1 * m1),
        },
    })
}

/// Runs every grid cell on the current rayon pool.
pub fn run_simulation(config: &SimulationConfig) -> Result<SimulationResult> {
    config.validate()?;
    let methods = config.methods();
    let cells = (0..config.grid.len())
        .map(|c| run_cell(config, &methods, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulationResult {
        config: SimulationConfig {
            methods,
            ..config.clone()
        },
        cells,
    })
}

/// [`run_simulation`] on a dedicated pool of `threads` workers (0 = rayon's
/// default).
pub fn run_simulation_with_threads(
    config: &SimulationConfig,
    threads: usize,
) -> Result<SimulationResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| run_simulation(config))
}

/// Mean `|W̃ₙ − S̃ₙ|` over `replicates` samples of size `n` in dimension `p`,
/// with both statistics evaluated on the same sample.
pub fn equivalence_diagnostic(
    model: &ModelSpec,
    n: usize,
    p: usize,
    replicates: usize,
    seed: u64,
) -> Result<f64> {
    if !model.kind().is_directional() {
        return Err(Error::InvalidParameter(
            "equivalence diagnostic needs a directional model".into(),
        ));
    }
    let config = SimulationConfig {
        replicates,
        ..SimulationConfig::new(
            model.clone(),
            vec![(n, p)],
            vec![StatisticKind::ModifiedWatson, StatisticKind::Sign],
            seed,
        )
    };
    let result = run_simulation(&config)?;
    Ok(result.cells[0]
        .equivalence
        .expect("both statistics requested"))
}

/// JSON number with 17 significant digits (`null` when not finite).
#[derive(Debug, Clone, Copy)]
pub struct Sig17(pub f64);

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return serializer.serialize_none();
        }
        let raw = serde_json::value::RawValue::from_string(format!("{:.16e}", self.0))
            .map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

impl Serialize for Histogram {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let (lo, hi) = self.range();
        let mut s = serializer.serialize_struct("Histogram", 5)?;
        s.serialize_field("range", &[Sig17(lo), Sig17(hi)])?;
        s.serialize_field("underflow", &self.underflow)?;
        s.serialize_field("counts", &self.counts)?;
        s.serialize_field("overflow", &self.overflow)?;
        s.end()
    }
}

impl Serialize for MethodSummary {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("MethodSummary", 10)?;
        s.serialize_field("method", self.method.name())?;
        s.serialize_field("reference", &self.reference.to_string())?;
        s.serialize_field("mean", &Sig17(self.mean))?;
        s.serialize_field("variance", &Sig17(self.variance))?;
        s.serialize_field("ks_normal", &Sig17(self.ks_normal))?;
        s.serialize_field("ks_reference", &Sig17(self.ks_reference))?;
        s.serialize_field("critical_value", &Sig17(self.critical_value))?;
        s.serialize_field("empirical_size", &Sig17(self.empirical_size))?;
        s.serialize_field("histogram", &self.histogram)?;
        s.end()
    }
}

struct CellSummary<'a>(&'a CellResult);

impl Serialize for CellSummary<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let c = self.0;
        let mut ratios = BTreeMap::new();
        ratios.insert(
            "u4_over_u2_squared",
            Sig17(c.condition_ratios.fourth_over_second_sq),
        );
        ratios.insert(
            "u2_over_u1_squared",
            Sig17(c.condition_ratios.second_over_first_sq),
        );
        let mut s = serializer.serialize_struct("Cell", 5)?;
        s.serialize_field("n", &c.n)?;
        s.serialize_field("p", &c.p)?;
        s.serialize_field("condition_ratios", &ratios)?;
        s.serialize_field("equivalence_mean_abs_diff", &c.equivalence.map(Sig17))?;
        s.serialize_field("methods", &c.summaries)?;
        s.end()
    }
}

struct ModelSummary<'a>(&'a ModelSpec);

impl Serialize for ModelSummary<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let kind = self.0.kind();
        let mut s = serializer.serialize_struct("Model", 4)?;
        s.serialize_field("dist", kind.name())?;
        match kind {
            ModelKind::FvML { kappa } | ModelKind::Purkayastha { kappa } => {
                s.serialize_field("kappa", &Sig17(kappa))?;
            }
            ModelKind::SpikedGaussian { sigma2, lambda } => {
                s.serialize_field("sigma2", &Sig17(sigma2))?;
                s.serialize_field("lambda", &Sig17(lambda))?;
            }
            _ => {}
        }
        let pole: Vec<Sig17> = self.0.pole().as_slice().iter().map(|&x| Sig17(x)).collect();
        let th = self.0.pole().as_slice();
        if th[0] == 1.0 && th[1..].iter().all(|&x| x == 0.0) {
            s.serialize_field("theta0", "e1")?;
        } else {
            s.serialize_field("theta0", &pole)?;
        }
        s.end()
    }
}

impl Serialize for SimulationResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let c = &self.config;
        let methods: Vec<&str> = c.methods.iter().map(|m| m.name()).collect();
        let cells: Vec<CellSummary> = self.cells.iter().map(CellSummary).collect();
        let mut s = serializer.serialize_struct("Simulation", 8)?;
        s.serialize_field("model", &ModelSummary(&c.model))?;
        s.serialize_field("seed", &c.seed)?;
        s.serialize_field("replicates", &c.replicates)?;
        s.serialize_field("methods", &methods)?;
        s.serialize_field("alpha", &Sig17(c.alpha))?;
        s.serialize_field("bins", &c.bins)?;
        s.serialize_field("bin_range", &[Sig17(c.bin_range.0), Sig17(c.bin_range.1)])?;
        s.serialize_field("cells", &cells)?;
        s.end()
    }
}

impl SimulationResult {
    /// Per-cell summary document.
    pub fn summary_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("summary serializes");
        out.push('\n');
        out
    }

    /// One row per replicate: `n,p,method,replicate,value`.
    pub fn replicates_csv(&self) -> String {
        let mut out = String::from("n,p,method,replicate,value\n");
        for cell in &self.cells {
            for (kind, values) in &cell.values {
                for (r, v) in values.iter().enumerate() {
                    let _ = writeln!(out, "{},{},{},{},{:?}", cell.n, cell.p, kind.name(), r, v);
                }
            }
        }
        out
    }
}
