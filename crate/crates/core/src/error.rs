use thiserror::Error;

/// Errors raised by the simulator, circuit builders, compiler and analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("register of {requested} qubits is outside the supported range 1..={max}")]
    Capacity { requested: usize, max: usize },
    #[error("qubit index error: {0}")]
    Index(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("cannot lower gate `{0}` to native pulses")]
    Compile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
