use thiserror::Error;

/// Errors surfaced by the lattice, pruning, segment, and simulation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty point sequence")]
    EmptyPath,
    #[error("dimension mismatch: expected {expected}, got {got} at point {index}")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        index: usize,
    },
    #[error("dimension {0} out of supported range 1..={max}", max = crate::lattice::MAX_DIM)]
    BadDimension(usize),
    #[error("step {index} is not a unit step")]
    NonUnitStep { index: usize },
    #[error("direct concatenation endpoint mismatch")]
    EndpointMismatch,
    #[error("translated concatenation requires a path rooted at the origin")]
    NotRootedAtOrigin,
    #[error("index {index} out of range 0..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("loop {index}: {reason}")]
    BadLoop { index: usize, reason: String },
    #[error("loop family must be nonempty")]
    EmptyFamily,
    #[error("prefix path is not pruned to a fixed point")]
    PrefixNotPruned,
    #[error("path is not erasable by the loop family")]
    NotErasable,
    #[error("segment {index} fails the retained-prefix compatibility test")]
    IncompatibleSegment { index: usize },
    #[error("segment count {got} does not match skeleton length {expected}")]
    SegmentCountMismatch { got: usize, expected: usize },
    #[error("malformed marked tree: {0}")]
    MalformedTree(String),
    #[error("malformed elementary-sequence map: {0}")]
    MalformedEs(String),
    #[error("address {0} is not a boundary address")]
    NotBoundaryAddress(String),
    #[error("path lies outside the fiber of the given exploration data")]
    OutsideFiber,
    #[error("piece at {0} lies outside its admissible segment class")]
    PieceOutsideClass(String),
    #[error("crossing pruning intervals (engine invariant violated)")]
    CrossingIntervals,
    #[error("window holds fewer than two certified cut steps")]
    UncertifiableRegion,
    #[error("window too small: {0}")]
    WindowTooSmall(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("conditioning event too rare within the sampling budget")]
    ConditioningTooRare,
    #[error("no completed excursions in sample")]
    NoCompletedExcursions,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
