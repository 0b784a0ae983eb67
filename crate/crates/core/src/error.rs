use thiserror::Error;

pub type Result<T, E = GfdmError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GfdmError {
    #[error("invalid block geometry: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("roll-off factor {0} outside [0, 1)")]
    InvalidRollOff(f64),

    #[error("roll-off {alpha} with M = {m} violates M*alpha > 1 (subcarriers must overlap by more than one bin)")]
    RollOffTooSmall { alpha: f64, m: usize },

    #[error("singular window entry at (k = {k}, m = {m})")]
    SingularWindow { k: usize, m: usize },

    #[error("singular channel: frequency bin {bin} is below the inversion threshold")]
    SingularChannel { bin: usize },

    #[error("cyclic prefix of {cp_len} samples is shorter than the channel memory ({taps} taps)")]
    CpTooShort { cp_len: usize, taps: usize },

    #[error("invalid receiver: {0}")]
    InvalidReceiver(String),

    #[error("invalid channel model: {0}")]
    InvalidChannel(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dense operation limited to N <= {limit}, got {n}")]
    TooLarge { n: usize, limit: usize },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for GfdmError {
    fn from(err: std::io::Error) -> Self {
        GfdmError::Io(err.to_string())
    }
}

impl From<serde_json::Error> for GfdmError {
    fn from(err: serde_json::Error) -> Self {
        GfdmError::Io(err.to_string())
    }
}

impl From<csv::Error> for GfdmError {
    fn from(err: csv::Error) -> Self {
        GfdmError::Io(err.to_string())
    }
}
