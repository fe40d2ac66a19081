use thiserror::Error;

/// Errors produced by model construction, evaluation, fitting, and I/O.
#[derive(Debug, Error)]
pub enum HawkesError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("latitude {0} out of range (|lat| must be < 89 degrees)")]
    LatitudeOutOfRange(f64),

    #[error("catalog is not sorted by time at index {0}")]
    UnsortedCatalog(usize),

    #[error("event {index} lies outside the spatial window")]
    EventOutsideWindow { index: usize },

    #[error("event {index} has group mark {mark} but catalog declares {n_marks} marks")]
    MarkOutOfRange {
        index: usize,
        mark: usize,
        n_marks: usize,
    },

    #[error("unstable productivity matrix: spectral radius {radius} >= 1")]
    Unstable { radius: f64 },

    #[error("infeasible parameter: {0}")]
    Infeasible(String),

    #[error("covariate lookup failed: {0}")]
    Covariate(String),

    #[error("optimizer failed: {0}")]
    Optimizer(String),

    #[error("thinning bound overflow: history of {n} events produced bound {bound}")]
    BoundOverflow { n: usize, bound: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, HawkesError>;
