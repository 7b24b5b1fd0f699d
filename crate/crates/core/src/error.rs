use alloc::string::String;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("array side must be at least {min}, got {got}")]
    ArrayTooSmall { min: usize, got: usize },

    #[error("ground point lies at or above the observer altitude")]
    PointAboveObserver,

    #[error("transmitter {0} cannot listen to its own illumination")]
    SelfListening(usize),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("transform length {padded} is shorter than the frame dimension {len}")]
    PaddingTooShort { len: usize, padded: usize },

    #[error("transform length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("transmitted symbol at ({symbol}, {subcarrier}) is zero")]
    ZeroSymbol { symbol: usize, subcarrier: usize },

    #[error("map holds no finite estimate")]
    NoEstimate,

    #[error("index {index} out of range for {len} entries")]
    OutOfRange { index: usize, len: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
