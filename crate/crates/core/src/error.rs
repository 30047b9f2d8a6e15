use thiserror::Error;

/// Errors raised by the structure, condition and sequence machinery.
///
/// Axiom and condition checks never fail on violations; violations are
/// returned as report data. These variants are for inputs that cannot be
/// evaluated at all.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("indeterminate ratio: both operands are absolute zero")]
    IndeterminateRatio,

    #[error("indeterminate sum: {0}")]
    IndeterminateSum(String),

    #[error("degenerate triple: {0}")]
    DegenerateTriple(String),

    #[error("inadmissible quadruple {0:?}: a point occurs three or more times")]
    InadmissibleQuadruple(Vec<String>),

    #[error("inadmissible tuple {0:?}: {1}")]
    InadmissibleTuple(Vec<String>, String),

    #[error("branch disagreement at ({x}, {y}): a-branch {a}, b-branch {b}")]
    BranchDisagreement {
        x: String,
        y: String,
        a: String,
        b: String,
    },

    #[error("missing table entry for quadruple {0:?}")]
    MissingEntry(Vec<String>),

    #[error("no good pair among the scanned candidates")]
    NoGoodPair,

    #[error("no pair is good for both sequences")]
    NoCommonGoodPair,

    #[error("tail of {what} does not settle: oscillation {oscillation:e} exceeds {tolerance:e}")]
    NonConvergentTail {
        what: String,
        oscillation: f64,
        tolerance: f64,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
