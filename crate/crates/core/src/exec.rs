//! Data-parallel execution of independent subproblems.
//!
//! With the `parallel` feature (default) the work runs on the rayon pool;
//! without it, or with [`Execution::Sequential`], it runs on the calling
//! thread. Results are always collected by index and reduced in fixed
//! order afterwards, so both paths produce bit-identical output.

/// Whether independent subproblems run on the rayon pool or inline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Use the rayon pool when the `parallel` feature is enabled,
    /// otherwise fall back to sequential execution.
    #[default]
    Parallel,
    Sequential,
}

/// Applies `f` to `0..n` and returns the results in index order.
pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..n).map(f).collect(),
        Execution::Parallel => map_parallel(n, f),
    }
}

#[cfg(feature = "parallel")]
fn map_parallel<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_parallel<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_in_order() {
        let a = map_indexed(Execution::Parallel, 100, |i| i * i);
        let b = map_indexed(Execution::Sequential, 100, |i| i * i);
        assert_eq!(a, b);
    }
}
