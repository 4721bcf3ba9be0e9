use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("point (s={s}, t={t}) lies outside the band")]
    OutOfDomain { s: f64, t: f64 },
    #[error("invalid metric: a(s={s}, t={t}) = {value} is not positive")]
    InvalidMetric { s: f64, t: f64, value: f64 },
    #[error("stencil of half-width {needed} does not fit in the band half-width {available}")]
    Stencil { needed: f64, available: f64 },
    #[error("degeneracy violation: beta2(s={s}) = {value} is not positive")]
    DegeneracyViolation { s: f64, value: f64 },
    #[error("not a well: d_t b(s={s}, 0) = {value} exceeds tolerance")]
    NotAWell { s: f64, value: f64 },
    #[error("degenerate miniwell: second derivative {delta} at x0 = {x0} is below tolerance")]
    DegenerateMiniwell { x0: f64, delta: f64 },
    #[error("quadrature failed to reach tolerance on [{a}, {b}] (estimate {estimate:e})")]
    Integration { a: f64, b: f64, estimate: f64 },
    #[error("prequantization error: 2s = {0} is not a nonzero integer")]
    Prequantization(f64),
    #[error("complex frequency: (t_K + b^2)^2 < 4 d_K")]
    ComplexFrequency,
    #[error("solvability violation: kernel component at derivative order {d} is {magnitude:e}")]
    SolvabilityViolation { d: usize, magnitude: f64 },
    #[error("construction bug: {0}")]
    ConstructionBug(String),
    #[error("truncation: envelope loses {mass_loss:e} of its mass outside the grid")]
    Truncation { mass_loss: f64 },
    #[error("grid resolution violated at h = {h}: spacing {spacing} exceeds {limit}")]
    GridResolution { h: f64, spacing: f64, limit: f64 },
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("request too large: {requested} eigenpairs for dimension {dimension}")]
    RequestTooLarge { requested: usize, dimension: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("ill-conditioned fit: {0}")]
    IllConditionedFit(String),
    #[error("sweep failed for every h: {0}")]
    SweepFailed(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
