use procmat::circuit::CircuitError;
use procmat::mcwf::McwfError;
use procmat::process::ProcessError;
use procmat::rydberg::RydbergError;
use procmat::tensor::TensorError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::ResourceCap(_) => 3,
            CliError::Schema(_) => 4,
            CliError::Numerical(_) => 5,
            CliError::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<TensorError> for CliError {
    fn from(e: TensorError) -> Self {
        match e {
            TensorError::DimensionOverflow { .. } => CliError::ResourceCap(e.to_string()),
            TensorError::NonFinite(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<ProcessError> for CliError {
    fn from(e: ProcessError) -> Self {
        match e {
            ProcessError::SchemaVersion { .. } => CliError::Schema(e.to_string()),
            ProcessError::Tensor(t) => t.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<McwfError> for CliError {
    fn from(e: McwfError) -> Self {
        match e {
            McwfError::DimensionOverflow { .. } => CliError::ResourceCap(e.to_string()),
            McwfError::NonFinite(_) | McwfError::ZeroJumpRate(_) => {
                CliError::Numerical(e.to_string())
            }
            McwfError::Trajectory { index, source } => match CliError::from(*source) {
                CliError::Numerical(m) => CliError::Numerical(format!("trajectory {index}: {m}")),
                other => other,
            },
            McwfError::Process(p) => p.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<RydbergError> for CliError {
    fn from(e: RydbergError) -> Self {
        match e {
            RydbergError::DimensionOverflow { .. } => CliError::ResourceCap(e.to_string()),
            RydbergError::Tensor(t) => t.into(),
            RydbergError::Mcwf(m) => m.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<CircuitError> for CliError {
    fn from(e: CircuitError) -> Self {
        match e {
            CircuitError::Process(p) => p.into(),
            CircuitError::Rydberg(r) => r.into(),
            CircuitError::Mcwf(m) => m.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}
