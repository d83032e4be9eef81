use rayon::prelude::*;
use revmarket_core::Executor;

/// Runs work on a dedicated rayon pool. Results come back in index order, so
/// output does not depend on the number of threads.
pub struct Rayon {
    pool: rayon::ThreadPool,
}

impl Rayon {
    /// `workers == 0` means one thread per available CPU.
    pub fn new(workers: usize) -> anyhow::Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()?;
        Ok(Self { pool })
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
        self.pool
            .install(|| (0..n).into_par_iter().map(f).collect())
    }
}
