use thiserror::Error;

/// Errors raised by the library operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("time order violated: t = {t} < s = {s}")]
    TimeOrder { t: f64, s: f64 },

    #[error("negative or non-finite time: {0}")]
    InvalidTime(f64),

    #[error("sample point outside carrier: {0}")]
    OutsideCarrier(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty grid: {0}")]
    EmptyGrid(&'static str),

    #[error("zero probe vector")]
    ZeroProbe,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("unknown gallery system `{0}`")]
    UnknownSystem(String),

    #[error("outside the validity domain: {0}")]
    Domain(String),

    #[error("negative value {value} at {at}")]
    NegativeValue { at: f64, value: f64 },

    #[error("element does not match the space carrier: {0}")]
    CarrierMismatch(&'static str),

    #[error("observable has zero L1 norm")]
    ZeroObservable,

    #[error("zero mean at (t, s) = ({t}, {s})")]
    ZeroMean { t: f64, s: f64 },

    #[error("sequence decreasing between index {index} and {next}")]
    DecreasingSequence { index: u64, next: u64 },

    #[error("sequence value below 1 at index {0}")]
    SequenceBelowOne(u64),

    #[error("sampler budget must be at least 1")]
    ZeroBudget,
}

pub type Result<T> = std::result::Result<T, Error>;
