use thiserror::Error;

/// Errors raised by grid construction, field algebra, the stepper and the
/// file formats.
#[derive(Debug, Error)]
pub enum HydroError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value {value} in {what} at node ({i}, {j}, {k}) = ({x1:.6}, {x2:.6}, {x3:.6})")]
    NonFiniteNode {
        what: String,
        value: f64,
        i: usize,
        j: usize,
        k: usize,
        x1: f64,
        x2: f64,
        x3: f64,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("Robin boundary conditions are only defined for scalar (temperature) fields")]
    RobinOnVector,

    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),

    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("state became non-finite at step {step} (t = {t})")]
    NonFinite { step: u64, t: f64 },

    #[error("hydrostatic constraint drift {residual:e} exceeds tolerance at step {step}")]
    ConstraintDrift { step: u64, residual: f64 },

    #[error("invalid stepper configuration: {0}")]
    InvalidConfig(String),

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HydroError>;
