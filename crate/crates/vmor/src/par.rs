//! Index-ordered parallel map. With the `parallel` feature off, or when
//! [`set_sequential`] is in effect, everything runs on the calling thread.
//! Results come back in index order either way.

use std::sync::atomic::{AtomicBool, Ordering};

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Switch the process-wide fallback on or off. Used by benches and by callers
/// that need a single thread.
pub fn set_sequential(on: bool) {
    FORCE_SEQUENTIAL.store(on, Ordering::SeqCst);
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.load(Ordering::SeqCst)
}

pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_range_with(n, is_parallel(), f)
}

pub fn map_range_with<T, F>(n: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_both_ways() {
        let a = map_range_with(100, true, |i| i * i);
        let b = map_range_with(100, false, |i| i * i);
        assert_eq!(a, b);
        assert_eq!(a[9], 81);
    }
}
