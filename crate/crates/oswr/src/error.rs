use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid frequency box: {0}")]
    InvalidBox(String),
    #[error("invalid transmission parameters: {0}")]
    InvalidParams(String),
    #[error("degenerate denominator s + z = 0 at omega = {omega}, k = {k}")]
    DegenerateDenominator { omega: f64, k: f64 },
    #[error("invalid sampling: {0}")]
    InvalidSampling(String),
    #[error("out of domain: {0}")]
    OutOfDomain(String),
    #[error("no root found: {0}")]
    NoRoot(String),
    #[error("closed form not applicable: {0}")]
    NotApplicable(String),
    #[error("minimum not bracketed: F({lo:e}) = {f_lo:e}, F({hi:e}) = {f_hi:e}")]
    BracketFailure { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("optimizer did not converge after {sweeps} sweeps (last relative change {change:e})")]
    NotConverged { sweeps: usize, change: f64 },
    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("unstable explicit scheme: dt = {dt:e} exceeds h^2/(4 nu) = {limit:e}")]
    UnstableExplicit { dt: f64, limit: f64 },
    #[error("singular subdomain matrix: {0}")]
    Singular(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("not enough data: {0}")]
    InsufficientData(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
