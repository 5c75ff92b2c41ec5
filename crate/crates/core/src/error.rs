use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0}")]
    InvalidParameter(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("duty cycle must lie in [0,1], got {0}")]
    DutyOutOfRange(f64),

    #[error("signed command must lie in [-1,1], got {0}")]
    CommandOutOfRange(f64),

    #[error("uncontrollable temperature channel: a2 = 0 in block {0}")]
    Uncontrollable(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("rank-deficient regressor: {0}")]
    RankDeficient(String),

    #[error("calibration failure: {0}")]
    Calibration(String),

    #[error("invariance certificate failed: negative entry of gamma*A at block {block}, row {row}, column {col}")]
    NotInvariant { block: usize, row: usize, col: usize },

    #[error("trace parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { context, expected, got })
    }
}
