//! Ordered map over independent work items, data-parallel when the
//! `parallel` feature is enabled.

/// How independent items (sweep points, trajectories) are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses the rayon pool; identical to `Sequential` without the
    /// `parallel` feature.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Applies `f` to every item and returns results in input order.
pub fn map_ordered<T, U, F>(items: &[T], exec: Execution, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Fallible variant of [`map_ordered`]; the first error in input order wins.
pub fn try_map_ordered<T, U, E, F>(items: &[T], exec: Execution, f: F) -> Result<Vec<U>, E>
where
    T: Sync,
    U: Send,
    E: Send,
    F: Fn(&T) -> Result<U, E> + Sync + Send,
{
    map_ordered(items, exec, f).into_iter().collect()
}
