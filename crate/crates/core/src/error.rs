use thiserror::Error;

/// Errors produced anywhere in the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("clause must have exactly 3 literals, found {0}")]
    ClauseLength(usize),

    #[error("variable {0} appears more than once in a clause")]
    RepeatedVariable(u32),

    #[error("variable index {index} out of range for {n} variables")]
    VariableOutOfRange { index: u32, n: u32 },

    #[error("{n} variables exceeds the enumeration cap of {cap}")]
    EnumerationCap { n: u32, cap: u32 },

    #[error("{n} variables exceeds the statevector cap of {cap}")]
    StatevectorCap { n: u32, cap: u32 },

    #[error("could not generate a {regime} instance within {attempts} attempts")]
    RegimeUnattainable { regime: String, attempts: u32 },

    #[error("state norm drifted to {0} (tolerance 1e-9)")]
    NormDrift(f64),

    #[error("formula is unsatisfiable; the solution objective is undefined")]
    Unsatisfiable,

    #[error("solution {0} has zero probability; shots-to-all-solutions is infinite")]
    ZeroProbabilitySolution(String),

    #[error("fairness test needs at least 2 solutions, found {0}")]
    TooFewSolutions(usize),

    #[error("count file bitstring {bitstring:?} has width {found}, expected {expected}")]
    CountWidth {
        bitstring: String,
        expected: u32,
        found: usize,
    },

    #[error("target {target} not reached within the round cap of {cap}")]
    RoundCapExceeded { target: f64, cap: usize },

    #[error("count file holds no shots")]
    EmptyCounts,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
