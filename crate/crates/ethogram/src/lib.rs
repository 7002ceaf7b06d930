//! Behavior-template dictionaries for accelerometer streams.
//!
//! This crate turns long, weakly labeled sensor recordings into compact
//! per-behavior query dictionaries and applies them back to unlabeled
//! streams:
//!
//! 1. [`series`] — series containers, weak label intervals, z-normalization
//!    and sliding window statistics.
//! 2. [`profile`] — z-normalized Euclidean distance profiles: a naive
//!    definitional implementation and an FFT-accelerated engine.
//! 3. [`dictionary`] — candidate enumeration over labeled regions, the
//!    nearest-neighbor sweep that scores each candidate, and selection of
//!    one conserved template per behavior class.
//! 4. [`matcher`] — applies a dictionary to a stream, whole or in
//!    bounded-memory chunks, emitting match events.
//! 5. [`evaluate`] — bag-level scoring of events against annotated
//!    regions, plus long-horizon frequency profiles.
//! 6. [`io`] / [`synth`] — file formats, ingestion diagnostics, and a
//!    seeded generator for synthetic streams with planted behaviors.
//!
//! Everything is deterministic: the same inputs (and seeds) produce the
//! same bytes, which the test suite leans on heavily.

pub mod dictionary;
pub mod error;
pub mod evaluate;
pub mod io;
pub mod matcher;
pub mod profile;
pub mod series;
pub mod synth;

pub use error::{Error, Result};
pub use series::{Axis, LabelInterval, MultiAxisSeries, TimeSeries};

// Every code block in the guide runs as a doc-test, so the book cannot
// drift from the library. `doctest` is only set while rustdoc extracts
// tests; these stubs vanish from real builds and rendered docs.
#[cfg(doctest)]
#[doc(hidden)]
pub mod guide {
    #[doc = include_str!("../../../book/src/overview.md")]
    pub struct Overview;
    #[doc = include_str!("../../../book/src/distance-profiles.md")]
    pub struct DistanceProfiles;
    #[doc = include_str!("../../../book/src/learning-a-dictionary.md")]
    pub struct LearningADictionary;
    #[doc = include_str!("../../../book/src/matching-streams.md")]
    pub struct MatchingStreams;
    #[doc = include_str!("../../../book/src/scoring-with-bags.md")]
    pub struct ScoringWithBags;
    #[doc = include_str!("../../../book/src/synthetic-benchmarks.md")]
    pub struct SyntheticBenchmarks;
    #[doc = include_str!("../../../book/src/files-and-cli.md")]
    pub struct FilesAndCli;
}
