use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed SDP: {0}")]
    MalformedSdp(String),
    #[error("SDP solver failed: {0}")]
    NumericalFailure(String),
    #[error("beamforming problem is infeasible: {0}")]
    InfeasibleBeamforming(String),
    #[error("lower bound needs at least one user")]
    EmptyQList,
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("config line {line}: {message}")]
    ConfigParse { line: usize, message: String },
    #[error("missing config key `{0}`")]
    MissingKey(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
