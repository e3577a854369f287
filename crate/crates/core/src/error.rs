use alloc::string::String;

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("series is empty")]
    EmptySeries,
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("value {value} at index {index} is outside [0, 100]")]
    OutOfRange { index: usize, value: f64 },
    #[error("exogenous column `{column}` has length {found}, expected {expected}")]
    ExogLength {
        column: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("max lag {max_lag} must be smaller than the series length {len}")]
    LagTooLarge { max_lag: usize, len: usize },
    #[error("split of {len} values at fraction {fraction} leaves an empty part")]
    DegenerateSplit { len: usize, fraction: f64 },
    #[error("window is empty")]
    EmptyWindow,

    #[error("actual has {actual} values but forecast has {forecast}")]
    LengthMismatch { actual: usize, forecast: usize },
    #[error("no values to score")]
    EmptyInput,
    #[error("every actual value is zero, MAPE is undefined")]
    AllActualsZero,

    #[error("smoothing factor {0} is out of range")]
    AlphaOutOfRange(f64),
    #[error("alpha grid is empty")]
    EmptyGrid,
    #[error("series too short: need at least {needed} values, got {found}")]
    SeriesTooShort { needed: usize, found: usize },
    #[error("model has not been initialized")]
    Uninitialized,

    #[error("no training data")]
    EmptyData,
    #[error("feature vector has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("window has length {found}, expected {expected}")]
    WindowLengthMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("sales ({sales}) exceed clicks ({clicks})")]
    SalesExceedClicks { clicks: u64, sales: u64 },
    #[error("conversion {conversion} does not match 100*sales/clicks = {expected}")]
    ConversionMismatch { conversion: f64, expected: f64 },
}
