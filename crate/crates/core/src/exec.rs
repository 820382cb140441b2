//! Pluggable execution of independent jobs.
//!
//! Score-matrix cells and Monte-Carlo replicates are pure functions of their
//! index, so any executor that returns results in index order yields the same
//! output as [`Sequential`].

use alloc::vec::Vec;

pub trait Executor {
    /// Evaluates `job(0..len)` and returns the results in index order.
    fn map<T, F>(&self, len: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs every job on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, len: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..len).map(job).collect()
    }
}
