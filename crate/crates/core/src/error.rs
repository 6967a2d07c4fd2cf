use thiserror::Error;

/// Errors produced while parsing a formula from text.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown predicate `{name}` at {line}:{col}")]
    UnknownPredicate { name: String, line: usize, col: usize },
    #[error("malformed interval [{t1},{t2}] at {line}:{col}")]
    MalformedInterval { t1: i64, t2: i64, line: usize, col: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("formula horizon {horizon} exceeds signal horizon {signal_horizon} at t={t}")]
    HorizonExceeded { horizon: usize, signal_horizon: usize, t: usize },

    #[error("negation of until has no rewrite; push negations manually or avoid `!` above `U`")]
    NegatedUntil,

    #[error("formula is not in negation normal form: negation above a non-predicate node")]
    NotInNnf,

    #[error("smooth operator parameter k must be positive, got {0}")]
    NonPositiveK(f64),

    #[error("smooth operator input must be nonempty")]
    EmptyInput,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("value-free band for a soft operator needs a range bound")]
    MissingRangeBound,

    #[error("signal-free error semantics require constant predicate noise (`{0}` is sample-dependent)")]
    SampleDependentNoise(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("signal samples must share one length, sample {index} has length {got} (expected {expected})")]
    RaggedSignal { index: usize, got: usize, expected: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("invalid problem file: {0}")]
    InvalidProblem(String),

    #[error("objective became non-finite at iteration {0}; try a smaller step size")]
    Diverged(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
