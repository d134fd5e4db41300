//! Command-line front-end.
//!
//! Exit codes: 0 on success (whatever the test decision), 2 on invalid
//! flags or input, 3 when a simulation cell aborts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::distributions::{ModelKind, ModelSpec};
use crate::error::Error;
use crate::inference::{self, INPUT_UNIT_TOL};
use crate::montecarlo::{self, Histogram, Sig17, SimulationConfig};
use crate::sphere::UnitVector;
use crate::statistics::StatisticKind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_ABORTED: i32 = 3;

/// Worker cap for simulations (0 or unset = one per core).
pub const THREADS_ENV: &str = "HDWATSON_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "hdwatson",
    version,
    about = "High-dimensional Watson and spikedness tests"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one test on a CSV data file and print the outcome as JSON.
    Test(TestArgs),
    /// Run a Monte Carlo campaign under a null model.
    Simulate(SimulateArgs),
    /// Histogram a replicates CSV produced by `simulate`.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Classical,
    Modified,
    Sign,
    Spiked,
}

impl From<Method> for StatisticKind {
    fn from(m: Method) -> Self {
        match m {
            Method::Classical => StatisticKind::ClassicalWatson,
            Method::Modified => StatisticKind::ModifiedWatson,
            Method::Sign => StatisticKind::Sign,
            Method::Spiked => StatisticKind::SpikedWatson,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Dist {
    Uniform,
    Fvml,
    Purkayastha,
    Spiked,
}

#[derive(Debug, Args)]
struct TestArgs {
    /// CSV file, one observation per row.
    #[arg(long)]
    input: PathBuf,
    /// Skip the first line of the input file.
    #[arg(long)]
    header: bool,
    /// `e1` or a path to a one-row CSV holding the pole.
    #[arg(long, default_value = "e1")]
    theta0: String,
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    dist: Dist,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Comma-separated `NxP` cells, e.g. `200x200,200x1000` (`×` also accepted).
    #[arg(long, conflicts_with_all = ["n", "p"])]
    grid: Option<String>,
    #[arg(long, requires = "p")]
    n: Option<usize>,
    #[arg(long, requires = "n")]
    p: Option<usize>,
    #[arg(long, default_value_t = montecarlo::DEFAULT_REPLICATES)]
    replicates: usize,
    /// Comma-separated subset of classical,modified,sign,spiked.
    #[arg(long, value_enum, value_delimiter = ',')]
    methods: Vec<Method>,
    #[arg(long)]
    seed: u64,
    /// Output prefix for `<out>.replicates.csv` and `<out>.summary.json`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value = "e1")]
    theta0: String,
    #[arg(long, default_value_t = montecarlo::DEFAULT_BINS)]
    bins: usize,
    /// Histogram range `lo:hi`.
    #[arg(long, default_value = "-4:4", allow_hyphen_values = true)]
    range: String,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Replicates CSV written by `simulate`.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = montecarlo::DEFAULT_BINS)]
    bins: usize,
    #[arg(long, default_value = "-4:4", allow_hyphen_values = true)]
    range: String,
    /// Output prefix; defaults to the input path minus `.replicates.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure with its exit code and one-line diagnostic.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args(), &mut stdout.lock(), &mut stderr.lock())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_INPUT;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    let result = match cli.command {
        Command::Test(args) => cmd_test(&args, out),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Report(args) => cmd_report(&args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

/// Reads a numeric CSV file into rows; errors name the 1-based data row.
fn read_rows(path: &Path, skip_header: bool) -> CliResult<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(skip_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| CliError::input(format!("row {}: {e}", i + 1)))?;
        if row.iter().any(|x| !x.is_finite()) {
            return Err(CliError::input(format!(
                "row {}: non-finite coordinate",
                i + 1
            )));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::input(format!("{}: no data rows", path.display())));
    }
    Ok(rows)
}

/// Resolves `e1` or a one-row CSV into a pole of dimension `p`.
fn parse_pole(spec: &str, p: usize) -> CliResult<UnitVector> {
    if spec == "e1" {
        return UnitVector::e1(p).map_err(|e| CliError::input(e.to_string()));
    }
    let rows = read_rows(Path::new(spec), false)?;
    if rows.len() != 1 {
        return Err(CliError::input(format!(
            "theta0 file {spec} must contain exactly one row, found {}",
            rows.len()
        )));
    }
    let row = &rows[0];
    if row.len() != p {
        return Err(CliError::input(format!(
            "theta0 has dimension {}, data has dimension {p}",
            row.len()
        )));
    }
    let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !((norm - 1.0).abs() <= INPUT_UNIT_TOL) {
        return Err(CliError::input(format!(
            "theta0 has norm {norm}, expected 1"
        )));
    }
    UnitVector::new(row.iter().map(|x| x / norm).collect())
        .map_err(|e| CliError::input(e.to_string()))
}

/// Rewrites 0-based observation indices in library errors as 1-based rows.
fn describe(e: &Error) -> String {
    match e {
        Error::DegenerateObservation { index } => {
            format!(
                "row {}: observation lies at the pole or its antipode; its sign is undefined",
                index + 1
            )
        }
        Error::DimensionMismatch {
            index,
            expected,
            found,
        } => {
            format!(
                "row {}: expected {expected} coordinates, found {found}",
                index + 1
            )
        }
        Error::NotUnitVector { index, norm, tol } => {
            format!("row {}: norm {norm} is not 1 within {tol:e}", index + 1)
        }
        other => other.to_string(),
    }
}

#[derive(Serialize)]
struct TestReport {
    method: &'static str,
    n: usize,
    p: usize,
    statistic: Sig17,
    critical_value: Sig17,
    p_value: Sig17,
    reject: bool,
    alpha: Sig17,
}

fn cmd_test(args: &TestArgs, out: &mut dyn Write) -> CliResult<()> {
    let rows = read_rows(&args.input, args.header)?;
    let p = rows[0].len();
    if let Some(i) = rows.iter().position(|r| r.len() != p) {
        return Err(CliError::input(format!(
            "row {}: expected {p} coordinates, found {}",
            i + 1,
            rows[i].len()
        )));
    }
    let method: StatisticKind = args.method.into();
    if method == StatisticKind::SpikedWatson {
        if let Some(i) = rows.iter().position(|r| r.iter().all(|&x| x == 0.0)) {
            return Err(CliError::input(format!(
                "row {}: zero observation cannot be projected",
                i + 1
            )));
        }
    }
    let pole = parse_pole(&args.theta0, p)?;
    let outcome = inference::run_test(&rows, &pole, method, args.alpha)
        .map_err(|e| CliError::input(describe(&e)))?;
    let report = TestReport {
        method: method.name(),
        n: outcome.statistic.n,
        p: outcome.statistic.p,
        statistic: Sig17(outcome.statistic.value),
        critical_value: Sig17(outcome.critical_value),
        p_value: Sig17(outcome.p_value),
        reject: outcome.reject,
        alpha: Sig17(outcome.alpha),
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    writeln!(out, "{json}").map_err(|e| CliError::input(e.to_string()))
}

fn parse_range(s: &str) -> CliResult<(f64, f64)> {
    let parsed = s
        .split_once(':')
        .and_then(|(a, b)| Some((a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?)));
    match parsed {
        Some((lo, hi)) if lo < hi && lo.is_finite() && hi.is_finite() => Ok((lo, hi)),
        _ => Err(CliError::input(format!(
            "range `{s}` must be `lo:hi` with lo < hi"
        ))),
    }
}

fn parse_grid(s: &str) -> CliResult<Vec<(usize, usize)>> {
    s.split(',')
        .map(|cell| {
            let cell = cell.trim();
            cell.split_once(['x', 'X', '×'])
                .and_then(|(n, p)| Some((n.trim().parse().ok()?, p.trim().parse().ok()?)))
                .ok_or_else(|| {
                    CliError::input(format!("grid cell `{cell}` must look like 200x1000"))
                })
        })
        .collect()
}

fn threads_from_env() -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v.trim().parse().map_err(|_| {
            CliError::input(format!("{THREADS_ENV}={v} is not a non-negative integer"))
        }),
        _ => Ok(0),
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes through a temporary sibling file and renames it into place.
fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let tmp = with_suffix(path, &format!(".tmp-{}", std::process::id()));
    let io = |e: std::io::Error| CliError::input(format!("{}: {e}", path.display()));
    fs::write(&tmp, contents).map_err(io)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e)
    })
}

fn model_from_args(args: &SimulateArgs, p: usize) -> CliResult<ModelSpec> {
    let need = |v: Option<f64>, flag: &str| {
        v.ok_or_else(|| {
            CliError::input(format!("--dist {:?} requires --{flag}", args.dist).to_lowercase())
        })
    };
    let kind = match args.dist {
        Dist::Uniform => ModelKind::UniformSphere,
        Dist::Fvml => ModelKind::FvML {
            kappa: need(args.kappa, "kappa")?,
        },
        Dist::Purkayastha => ModelKind::Purkayastha {
            kappa: need(args.kappa, "kappa")?,
        },
        Dist::Spiked => ModelKind::SpikedGaussian {
            sigma2: args.sigma2.unwrap_or(1.0),
            lambda: need(args.lambda, "lambda")?,
        },
    };
    let pole = parse_pole(&args.theta0, p)?;
    ModelSpec::new(kind, pole).map_err(|e| CliError::input(e.to_string()))
}

fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let grid = match (&args.grid, args.n, args.p) {
        (Some(g), _, _) => parse_grid(g)?,
        (None, Some(n), Some(p)) => vec![(n, p)],
        _ => {
            return Err(CliError::input(
                "either --grid or both --n and --p are required",
            ))
        }
    };
    let model = model_from_args(args, grid[0].1)?;
    let methods: Vec<StatisticKind> = if args.methods.is_empty() {
        vec![if model.kind().is_directional() {
            StatisticKind::ModifiedWatson
        } else {
            StatisticKind::SpikedWatson
        }]
    } else {
        args.methods.iter().map(|&m| m.into()).collect()
    };
    let config = SimulationConfig {
        model,
        grid,
        replicates: args.replicates,
        methods,
        alpha: args.alpha,
        seed: args.seed,
        bins: args.bins,
        bin_range: parse_range(&args.range)?,
    };
    config
        .validate()
        .map_err(|e| CliError::input(e.to_string()))?;
    if args.theta0 != "e1" {
        if let Some(&(n, p)) = config.grid.iter().find(|&&(_, p)| p != config.model.dim()) {
            return Err(CliError::input(format!(
                "cell (n={n}, p={p}) does not match the dimension of theta0 ({})",
                config.model.dim()
            )));
        }
    }
    let threads = threads_from_env()?;
    let result =
        montecarlo::run_simulation_with_threads(&config, threads).map_err(|e| match e {
            Error::Replicate { .. } => CliError {
                code: EXIT_ABORTED,
                message: e.to_string(),
            },
            other => CliError::input(other.to_string()),
        })?;
    write_atomic(
        &with_suffix(&args.out, ".replicates.csv"),
        &result.replicates_csv(),
    )?;
    write_atomic(
        &with_suffix(&args.out, ".summary.json"),
        &result.summary_json(),
    )
}

/// Replicate values keyed by `(n, p, method)`.
pub type ReplicateGroups = Vec<((usize, usize, StatisticKind), Vec<f64>)>;

/// Groups in order of first appearance.
pub fn read_replicates(text: &str) -> Result<ReplicateGroups, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let expected = ["n", "p", "method", "replicate", "value"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(format!("header must be `{}`", expected.join(",")));
    }
    let mut groups: ReplicateGroups = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| format!("line {line}: {e}"))?;
        let field = |k: usize| record.get(k).unwrap_or("");
        let bad = |what: &str| {
            format!(
                "line {line}: invalid {what} `{}`",
                field(expected.iter().position(|h| *h == what).unwrap())
            )
        };
        let n: usize = field(0).parse().map_err(|_| bad("n"))?;
        let p: usize = field(1).parse().map_err(|_| bad("p"))?;
        let method = StatisticKind::from_name(field(2)).ok_or_else(|| bad("method"))?;
        let _: usize = field(3).parse().map_err(|_| bad("replicate"))?;
        let value: f64 = field(4).parse().map_err(|_| bad("value"))?;
        if p < 2 {
            return Err(bad("p"));
        }
        let key = (n, p, method);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, values)) => values.push(value),
            None => groups.push((key, vec![value])),
        }
    }
    if groups.is_empty() {
        return Err("no replicate rows".into());
    }
    Ok(groups)
}

/// Histogram table with two sentinel rows carrying the overflow mass.
pub fn histogram_csv(groups: &ReplicateGroups, bins: usize, range: (f64, f64)) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("n,p,method,bin_lo,bin_hi,count,density\n");
    for ((n, p, kind), values) in groups {
        let standardized: Vec<f64> = values
            .iter()
            .map(|&v| montecarlo::standardized(*kind, *p, v))
            .collect();
        let h = Histogram::from_values(&standardized, bins, range);
        let m = h.total() as f64;
        let name = kind.name();
        let (lo, hi) = range;
        let _ = writeln!(
            out,
            "{n},{p},{name},-inf,{lo:?},{},{:?}",
            h.underflow,
            h.underflow as f64 / m
        );
        for (k, &count) in h.counts.iter().enumerate() {
            let (a, b) = h.edges(k);
            let _ = writeln!(
                out,
                "{n},{p},{name},{a:?},{b:?},{count},{:?}",
                count as f64 / (m * (b - a))
            );
        }
        let _ = writeln!(
            out,
            "{n},{p},{name},{hi:?},inf,{},{:?}",
            h.overflow,
            h.overflow as f64 / m
        );
    }
    out
}

fn cmd_report(args: &ReportArgs) -> CliResult<()> {
    let range = parse_range(&args.range)?;
    if args.bins < 5 {
        return Err(CliError::input(format!(
            "bins must be >= 5, got {}",
            args.bins
        )));
    }
    let text = fs::read_to_string(&args.input)
        .map_err(|e| CliError::input(format!("{}: {e}", args.input.display())))?;
    let groups = read_replicates(&text)
        .map_err(|e| CliError::input(format!("{}: {e}", args.input.display())))?;
    let prefix = args.out.clone().unwrap_or_else(|| {
        let s = args.input.to_string_lossy();
        PathBuf::from(
            s.strip_suffix(".replicates.csv")
                .or_else(|| s.strip_suffix(".csv"))
                .unwrap_or(&s),
        )
    });
    write_atomic(
        &with_suffix(&prefix, ".hist.csv"),
        &histogram_csv(&groups, args.bins, range),
    )
}
