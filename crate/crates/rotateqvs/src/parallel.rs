use rayon::prelude::*;
use rayon::ThreadPool;
use rotateqvs_core::Executor;

/// Executor backed by a dedicated rayon pool. Results come back in index
/// order, so training and evaluation stay bit-identical to the sequential
/// path.
pub struct Rayon {
    pool: ThreadPool,
}

impl Rayon {
    pub fn new(threads: usize) -> Self {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .expect("failed to start thread pool");
        Rayon { pool }
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Rayon {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}
