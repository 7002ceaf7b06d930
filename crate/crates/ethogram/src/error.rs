//! Crate-wide error type.
//!
//! Every fallible operation returns [`Error`]. Variants carry enough
//! context (class names, axis ids, line numbers) that a caller can turn
//! any of them into a single actionable diagnostic line.

use crate::series::Axis;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("input is empty")]
    EmptyInput,

    #[error("subsequence length {m} is out of range for a series of {n} samples")]
    WindowLength { m: usize, n: usize },

    #[error("subsequence length {m} is below the minimum of {min}")]
    SubsequenceTooShort { m: usize, min: usize },

    #[error("subsequence [{start}, {start}+{m}) does not fit in a series of {n} samples")]
    SubsequenceOutOfBounds { start: usize, m: usize, n: usize },

    #[error("query is flat (standard deviation below {epsilon:e}); it has no z-normalized shape")]
    FlatQuery { epsilon: f64 },

    #[error("non-finite value {value} at position {index}")]
    NonFiniteValue { index: usize, value: f64 },

    #[error("sample rate must be positive and finite, got {rate}")]
    BadSampleRate { rate: f64 },

    #[error("axis series lengths differ: {0}")]
    AxisLengthMismatch(String),

    #[error("label interval has start {start} after end {end}")]
    IntervalReversed { start: usize, end: usize },

    #[error("behavior class {0:?} is empty or contains characters outside [A-Za-z0-9_-]")]
    BadClassName(String),

    #[error("overlapping {class:?} labels: [{a_start}, {a_end}] and [{b_start}, {b_end}]")]
    OverlappingLabels {
        class: String,
        a_start: usize,
        a_end: usize,
        b_start: usize,
        b_end: usize,
    },

    #[error("label interval [{start}, {end}] exceeds the series length {n}")]
    IntervalOutOfBounds { start: usize, end: usize, n: usize },

    #[error("no labels of class {0:?} in the training data")]
    NoLabelsForClass(String),

    #[error(
        "length range is empty: lengths {min}..={max} (step {step}) after clipping to the \
         shortest {class:?} interval of {limit} samples"
    )]
    EmptyLengthRange {
        class: String,
        min: usize,
        max: usize,
        step: usize,
        limit: usize,
    },

    #[error("no conserved template for class {class:?}: {candidates} candidates swept, none matched every labeled region without a foreign match")]
    NoConservedTemplate { class: String, candidates: usize },

    #[error("dictionary already contains a template for class {0:?}")]
    DuplicateClass(String),

    #[error("template {class:?} requires axis {axis} which the stream does not carry")]
    AxisMissing { class: String, axis: Axis },

    #[error("chunk geometry invalid: chunk {chunk} must exceed twice the overlap {overlap}, and overlap must be at least {min_overlap} for the longest template")]
    ChunkGeometry {
        chunk: usize,
        overlap: usize,
        min_overlap: usize,
    },

    #[error(
        "bags overlap: [{a_start}, {a_end}] ({a_class:?}) and [{b_start}, {b_end}] ({b_class:?})"
    )]
    OverlappingBags {
        a_class: String,
        a_start: usize,
        a_end: usize,
        b_class: String,
        b_start: usize,
        b_end: usize,
    },

    #[error("window geometry invalid: {0}")]
    BadWindowGeometry(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("infeasible schedule: could not place {wanted} {class:?} plants without overlapping another padded interval")]
    InfeasibleSchedule { class: String, wanted: usize },

    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
