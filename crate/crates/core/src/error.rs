use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported modulation order {0} (expected 4, 16 or 64)")]
    UnsupportedOrder(usize),
    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("noise variance must be positive, got {0}")]
    NonPositiveNoiseVariance(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("record set is empty")]
    EmptyRecords,
    #[error("record {position} in frame {frame} has no {source_name} bit")]
    MissingBit {
        frame: u32,
        position: u32,
        source_name: &'static str,
    },
    #[error("bit channel {0} is not covered")]
    UncoveredChannel(usize),
    #[error("no records with transmitted bit {0}")]
    EmptyClass(u8),
    #[error("no histogram bin has enough samples in both conditionals")]
    NoPopulatedBins,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
