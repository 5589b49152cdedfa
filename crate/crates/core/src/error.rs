use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("invalid weight {value} at index {index}: weights must be finite and strictly positive")]
    InvalidWeight { index: usize, value: f64 },

    #[error("non-finite value {value} at index {index} in {what}")]
    NonFinite {
        what: &'static str,
        index: usize,
        value: f64,
    },

    #[error("parameter {name} = {value} is outside its domain ({domain})")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("distance matrix is not a semi-distance: {0}")]
    NotSemiDistance(String),

    #[error("norm specification does not match the field axes: {0}")]
    AxisMismatch(String),

    #[error("exact covering needs |T| <= {cap}, got {size}; use the greedy upper bound instead")]
    ExactCapExceeded { size: usize, cap: usize },

    #[error("not enough usable profile points for a fit: {usable} (need at least {needed})")]
    TooFewPoints { usable: usize, needed: usize },

    #[error("moment of order {order} is unavailable: {reason}")]
    MomentUnavailable { order: f64, reason: String },

    #[error("inconsistent moment data: {0}")]
    Inconsistent(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("series diverges: {0}")]
    Divergent(String),

    #[error("negative mixing coefficient {value} at lag {lag}")]
    NegativeMixing { lag: usize, value: f64 },
}

pub(crate) fn check_finite(what: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            what,
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}
