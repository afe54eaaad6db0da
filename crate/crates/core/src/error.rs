use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("{0} is not defined for a constant learning-rate policy")]
    ConstantPolicy(&'static str),

    #[error("degenerate learning-rate bounds: eta_min == eta_max == {0}")]
    DegenerateBounds(f64),

    #[error("action {action} out of range for {n} discrete actions")]
    ActionOutOfRange { action: usize, n: usize },

    #[error("environment episode is over; call reset before stepping")]
    EpisodeOver,

    #[error("malformed trajectory: {0}")]
    MalformedTrajectory(String),

    #[error("rollout buffer incomplete: {filled} of {capacity} steps filled")]
    IncompleteBuffer { filled: usize, capacity: usize },

    #[error("rollout buffer generation {0} was already consumed by an update")]
    BufferConsumed(u64),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("unknown environment id `{0}`")]
    UnknownEnv(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
