use thiserror::Error;

/// Errors raised by the model, likelihood, Fisher and estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("model violation: {0}")]
    ModelViolation(String),
    #[error("inconsistent data: {0}")]
    InconsistentData(String),
    #[error("support violation: {0}")]
    SupportViolation(String),
    #[error("numerical collapse: {0}")]
    NumericalCollapse(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("no data")]
    NoData,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::ParameterDomain(msg.into()))
}
