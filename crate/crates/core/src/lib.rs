//! Adaptive evaluation of deep-clustering trials.
//!
//! A *trial* is an embedding space together with the partition a clustering
//! run produced in it. This crate scores partitions with internal validity
//! indices, screens spaces for multimodality with the dip test, groups spaces
//! by the rank correlation of the scores they assign, weights spaces inside a
//! group with PageRank or HITS and picks the group whose aggregated scores are
//! highest. The raw, paired and pooled baselines and the external measures
//! used to judge all of them live here as well.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, threading and
//! the command-line front end live in the `ace-cli` crate.

#![no_std]

extern crate alloc;

pub mod data;
pub mod error;
pub mod exec;
pub mod external;
pub mod grouping;
pub mod indices;
pub mod linalg;
pub mod link;
pub mod pipeline;
pub mod rng;
pub mod stats;
pub mod synth;

pub use data::{EmbeddingMatrix, Partition, Trial, TrialBundle};
pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use indices::{IndexId, IndexValue, ScoreMatrix};
pub use pipeline::{AceConfig, AceReport};
