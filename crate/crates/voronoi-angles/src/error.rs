//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the geometry, sampling and estimation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate pair: the two points coincide")]
    DegeneratePair,

    #[error("angle undefined: reference point coincides with a pair member or is collinear outside the segment")]
    AngleUndefined,

    #[error("sample too large: expected count {0:.3e} exceeds 1e8")]
    SampleTooLarge(f64),

    #[error("origin is not strictly inside the window")]
    OriginOutsideWindow,

    #[error("sample is already palm-augmented")]
    AlreadyPalmAugmented,

    #[error("sample is not palm-augmented")]
    NotPalmAugmented,

    #[error("operation requires a nonempty sample")]
    EmptySample,

    #[error("all points are excluded from the query")]
    AllPointsExcluded,

    #[error("inner window is not contained in the sample window")]
    InnerNotContained,

    #[error("degenerate crossing: {0}")]
    DegenerateCrossing(&'static str),

    #[error("degenerate configuration: {0:.1}% of replications aborted")]
    DegenerateConfiguration(f64),

    #[error("observation measure must be positive")]
    ZeroMeasure,

    #[error("no handovers observed in any replication")]
    NoHandovers,

    #[error("too few marks: need at least {needed}, got {got}")]
    TooFewMarks { needed: usize, got: usize },

    #[error("rebin: expected count {count:.2} in bin {bin} is below 5")]
    Rebin { bin: usize, count: f64 },

    #[error("arc-length formula is undefined at theta = pi; use the midpoint count instead")]
    ArcLengthAtPi,

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
