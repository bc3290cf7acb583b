use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

/// Library-wide error type. Variants are grouped so a frontend can map
/// them onto coarse exit classes: bad inputs, unmet statistical
/// preconditions, and I/O failures.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    /// A malformed record in an input file, with its 1-based line number.
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid value: {0}")]
    Domain(String),

    /// A statistical precondition on sample size failed.
    #[error("{what}: need at least {needed}, have {available}")]
    Insufficient {
        what: String,
        needed: usize,
        available: usize,
    },

    #[error("rank-deficient design: {0}")]
    Collinear(String),

    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl CoreError {
    /// Exit class used by the command-line frontend:
    /// 1 validation, 2 statistical precondition, 3 I/O.
    pub fn exit_class(&self) -> i32 {
        match self {
            CoreError::Io(_) => 3,
            CoreError::Malformed { .. } | CoreError::Config(_) | CoreError::Domain(_) => 1,
            CoreError::Insufficient { .. }
            | CoreError::Collinear(_)
            | CoreError::Numeric(_) => 2,
        }
    }

    pub fn insufficient(what: &str, needed: usize, available: usize) -> Self {
        CoreError::Insufficient {
            what: what.to_string(),
            needed,
            available,
        }
    }
}
