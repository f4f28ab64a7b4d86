//! Data-parallel map over independent work items (flows, brackets, trials).
//!
//! With the `parallel` feature the map runs on the rayon pool; without it
//! every [`Execution`] mode runs sequentially. Output order always matches
//! input order, so results are identical across modes.

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    /// Parallel when the `parallel` feature is enabled.
    #[default]
    Auto,
    Sequential,
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self != Execution::Sequential
    }
}

pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Runs `f` inside a rayon pool capped at `threads` workers (no-op cap
/// without the `parallel` feature).
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if let Some(t) = threads.filter(|&t| t > 0) {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            return pool.install(f);
        }
    }
    let _ = threads;
    f()
}
