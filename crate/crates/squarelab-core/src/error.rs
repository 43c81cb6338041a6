use thiserror::Error;

/// Errors raised by the exact computation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("zero denominator")]
    ZeroDenominator,

    #[error("division by zero scalar")]
    DivisionByZero,

    #[error("level {level} out of range (tree depth {depth})")]
    LevelOutOfRange { level: usize, depth: usize },

    #[error("below resolution")]
    BelowResolution,

    #[error("empty set")]
    EmptySet,

    #[error("enumeration too large")]
    EnumerationTooLarge,

    #[error("expansion does not sum to indicator")]
    IncompleteExpansion,

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("too many cells for exhaustive search: {0}")]
    TooManyCells(usize),

    #[error("grid length must be a power of two")]
    BadGridLength,

    #[error("decomposition deeper than the grid allows")]
    TooManyLevels,

    #[error("resolution mismatch: set resolution {set} exceeds grid exponent {grid}")]
    ResolutionMismatch { set: u32, grid: u32 },

    #[error("positivity violated: {0}")]
    PositivityViolation(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
