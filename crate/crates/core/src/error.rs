use thiserror::Error;

/// Errors raised by the planning library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("cost {cost} is below the straight-line distance {l_min}")]
    InfeasibleCost { cost: f64, l_min: f64 },

    #[error("start and goal coincide")]
    DegenerateFoci,

    #[error("informed sampling exhausted its budget of {0} attempts")]
    SamplingStarved(usize),

    #[error("connection radius undefined for {0} samples")]
    RadiusUndefined(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("degenerate scenario: {0}")]
    DegenerateScenario(String),

    #[error("over-constrained scenario: {0}")]
    OverConstrained(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for PlanError {
    fn from(e: std::io::Error) -> Self {
        PlanError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for PlanError {
    fn from(e: serde_json::Error) -> Self {
        PlanError::Io(e.to_string())
    }
}

impl From<csv::Error> for PlanError {
    fn from(e: csv::Error) -> Self {
        PlanError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, PlanError>;
