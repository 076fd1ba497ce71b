use thiserror::Error;

/// Errors produced by dataset handling, sorting and the network engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("event out of bounds: crystal {crystal}, time {time} (detector is {crystals}x{timesteps})")]
    EventOutOfBounds {
        crystal: u32,
        time: u32,
        crystals: u32,
        timesteps: u32,
    },

    #[error("duplicate event at crystal {crystal}, time {time}")]
    DuplicateEvent { crystal: u32, time: u32 },

    #[error("non-binary value {value} at row {row}, column {col}")]
    NonBinaryValue { row: usize, col: usize, value: f64 },

    #[error("label event at crystal {crystal}, time {time} missing from input")]
    LabelNotInInput { crystal: u32, time: u32 },

    #[error("detector config mismatch: {0}")]
    ConfigMismatch(String),

    #[error("events not sorted by (time, crystal) at index {index}")]
    UnsortedEvents { index: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("length mismatch: {left} predictions vs {right} samples")]
    LengthMismatch { left: usize, right: usize },

    #[error("dataset is empty or too small: {0}")]
    DatasetTooSmall(String),

    #[error("reference matcher size guard exceeded: {spikes} spikes in one crystal (limit {limit})")]
    MatcherSizeGuard { spikes: usize, limit: usize },

    #[error("bad magic at offset {offset}")]
    BadMagic { offset: u64 },

    #[error("unsupported format version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },

    #[error("truncated input at offset {offset}: expected {expected} bytes, {available} available")]
    Truncated {
        offset: u64,
        expected: usize,
        available: usize,
    },

    #[error("invalid field at offset {offset}: {reason}")]
    InvalidField { offset: u64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
