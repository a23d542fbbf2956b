//! Fork/join hook for the optional parallel modes.

use alloc::vec::Vec;

/// Maps `f` over `0..n` and returns the results in index order.
///
/// Implementations may run calls concurrently but must preserve ordering so
/// that any reduction done by the caller is deterministic.
pub trait Executor {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}
