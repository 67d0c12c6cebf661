use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("prescribed data must be positive, got {value} at {location}")]
    NonPositiveData { value: f64, location: String },

    #[error("convexity lost at node {node}: principal radius {radius}")]
    ConvexityLoss { node: usize, radius: f64 },

    #[error("hypersurface is not spacelike (1 + sigma*|Dr|^2/theta^2 = {0})")]
    NotSpacelike(f64),

    #[error("no barrier: {0}")]
    NoBarrier(String),

    #[error("not classified: {0}")]
    NotClassified(String),

    #[error("parse error at byte {position}: expected {expected}, found {found}")]
    Parse {
        position: usize,
        expected: String,
        found: String,
    },

    #[error("unknown identifier `{name}` at byte {position}")]
    UnknownIdentifier { name: String, position: usize },

    #[error("division by zero while evaluating expression")]
    DivisionByZero,

    #[error("time step underflow (dt = {dt:e}) at step {step}")]
    Stall { dt: f64, step: usize },

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(format!("line {} column {}: {}", e.line(), e.column(), e))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
