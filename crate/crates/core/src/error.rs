use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vector norm {norm:e} is at or below tolerance {tol:e}; cannot project to the sphere")]
    NearZeroVector { norm: f64, tol: f64 },

    #[error("observation {index} lies within tolerance of the pole or its antipode; its sign is undefined")]
    DegenerateObservation { index: usize },

    #[error("sum of squared radial parts is not positive (all observations at the pole or its antipode)")]
    DegenerateDenominator,

    #[error("dimension mismatch at observation {index}: expected {expected}, found {found}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("observation {index} has norm {norm} (expected 1 within {tol:e})")]
    NotUnitVector { index: usize, norm: f64, tol: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside domain: {0}")]
    DomainError(String),

    #[error("sampler exceeded {proposals} proposals for a single draw")]
    SamplerStalled { proposals: u64 },

    #[error("cosine CDF tabulation failed: {0}")]
    TabulationFailed(String),

    #[error("cell {cell} (n={n}, p={p}) aborted at replicate {replicate}: {source}")]
    Replicate {
        cell: usize,
        n: usize,
        p: usize,
        replicate: usize,
        source: Box<Error>,
    },
}
