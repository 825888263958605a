use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{what}: no valid outcome after {attempts} attempts")]
    RetryExhausted { what: &'static str, attempts: usize },

    #[error("time lag must be at least 1, got {0}")]
    InvalidLag(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("integration diverged at step {step}")]
    Diverged { step: usize },

    #[error("zero-variance series at node {node}, dim {dim}")]
    DegenerateSeries { node: usize, dim: usize },

    #[error("ground truth is all-positive or all-negative over the pair universe")]
    DegenerateTruth,

    #[error("every prediction hit a degenerate ground truth")]
    AllDegenerate,

    #[error("column {0} is constant")]
    ConstantSeries(usize),

    #[error("normal equations are singular")]
    SingularDesign,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unknown system {0:?}")]
    UnknownSystem(String),
}
