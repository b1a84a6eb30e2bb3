use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate metric at grid point {point} (min eigenvalue {min_eigenvalue:e})")]
    DegenerateMetric { point: usize, min_eigenvalue: f64 },

    #[error("initial data violates positivity: min eigenvalue {min_eigenvalue:e} at point {point}")]
    Positivity { point: usize, min_eigenvalue: f64 },

    #[error("unsupported tensor signature: {0}")]
    Signature(String),

    #[error("non-finite values at t = {t}")]
    NonFinite { t: f64 },

    #[error("invalid Lie algebra: {0}")]
    Algebra(String),

    #[error("catalog parse error on line {line}: {msg}")]
    Catalog { line: usize, msg: String },

    #[error("convention calibration failed: {0}")]
    Calibration(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
