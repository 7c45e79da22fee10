use thiserror::Error;

/// Errors raised while validating or generating a duplex topology.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("invalid generator configuration: {0}")]
    Config(String),
    #[error("degree sequence is not graphical: {0}")]
    NotGraphical(String),
    #[error("{what}: budget of {budget} not reached after {attempts} attempts")]
    BudgetUnreachable {
        what: &'static str,
        budget: usize,
        attempts: u64,
    },
    #[error("stub matching failed after {restarts} restarts")]
    MatchingFailed { restarts: u32 },
}

/// Errors raised by the stochastic dynamics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid dynamics parameter `{field}` = {value}: {reason}")]
    Param {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("degenerate network: cost ledger mass plus acquired degree is zero")]
    DegenerateNetwork,
}

/// Errors raised while reading an experiment configuration.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config syntax error: {0}")]
    Syntax(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing required field `{0}`")]
    Missing(String),
    #[error("`{field}` = {value} is out of range; legal range is {range}")]
    OutOfRange {
        field: String,
        value: String,
        range: String,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Top-level error type for protocol runs and the command-line tool.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    MeanField(#[from] MeanFieldError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Runtime(String),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the mean-field solver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeanFieldError {
    #[error("invalid mean-field parameter `{field}` = {value}: {reason}")]
    Param {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("control grid must be strictly increasing with at least {min} points")]
    Grid { min: usize },
}
