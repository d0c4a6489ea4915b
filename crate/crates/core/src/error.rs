use thiserror::Error;

/// Rejections raised by the numerical routines.
///
/// Every variant is a precondition failure on caller-supplied data; none of
/// them indicate a bug in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("sequence is not summable: {0}")]
    NotSummable(String),

    #[error("first moment sum n*eta_n is infinite")]
    FirstMomentInfinite,

    #[error("sequence is not nonincreasing at index {index}")]
    NotMonotone { index: usize },

    #[error("non-positive value at index {index}: {value}")]
    NonPositive { index: usize, value: f64 },

    #[error("requested tolerance {requested:e} is below the certified floor {floor:e}")]
    ToleranceUnachievable { requested: f64, floor: f64 },

    #[error("index {index} is outside the stored range 1..={n_max} and the tail model cannot evaluate it")]
    OutOfRange { index: usize, n_max: usize },

    #[error("coefficient a_{index} is required but not available")]
    MissingIndex { index: usize },

    #[error("enumeration of {count} terms exceeds the limit {limit}")]
    EnumerationTooLarge { count: u128, limit: u128 },

    #[error("kernel is singular: n = {n} does not clear the support of the measure (sup = {sup})")]
    Singular { n: f64, sup: f64 },

    #[error("truncation at M = {m} leaves relative mass {achieved:e} > {requested:e}")]
    TruncationTooCoarse { m: usize, achieved: f64, requested: f64 },

    #[error("T({index}) underflows in double precision")]
    Underflow { index: usize },

    #[error("series diverges: {0}")]
    Divergent(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
