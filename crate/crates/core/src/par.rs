//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) these fan out over the rayon global
//! pool. Without it, or while [`force_sequential`] is active, they run on the
//! calling thread. Results are always returned in index order, so outputs do
//! not depend on the execution mode.

use std::sync::atomic::{AtomicUsize, Ordering};

static SEQUENTIAL_OVERRIDE: AtomicUsize = AtomicUsize::new(0);

/// Returns true when the helpers will dispatch to rayon.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && SEQUENTIAL_OVERRIDE.load(Ordering::Relaxed) == 0
}

/// Runs `f` with every helper in this module forced onto the sequential path.
///
/// The override is process-wide; it exists so benchmarks can compare both
/// paths inside one binary.
pub fn force_sequential<R>(f: impl FnOnce() -> R) -> R {
    struct Guard;
    impl Drop for Guard {
        fn drop(&mut self) {
            SEQUENTIAL_OVERRIDE.fetch_sub(1, Ordering::SeqCst);
        }
    }
    SEQUENTIAL_OVERRIDE.fetch_add(1, Ordering::SeqCst);
    let _guard = Guard;
    f()
}

/// Evaluates `f(i)` for `i in 0..n` and collects the results in order.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Maps `f` over a slice, preserving order.
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    map_range(items.len(), |i| f(&items[i]))
}

/// Fallible variant of [`map_range`]; returns the lowest-index error.
pub fn try_map_range<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_range(n, f).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_in_both_modes() {
        let par = map_range(1000, |i| i * i);
        let seq = force_sequential(|| map_range(1000, |i| i * i));
        assert_eq!(par, seq);
        assert_eq!(par[31], 961);
    }

    #[test]
    fn first_error_wins() {
        let r: Result<Vec<usize>, usize> =
            try_map_range(10, |i| if i % 4 == 3 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(3));
    }
}
