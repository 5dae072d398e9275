//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature off, or with `parallel == false`, every helper
//! runs on the calling thread. Results are always returned in input order.

/// Maps `f` over `items`, preserving order.
pub fn map_collect<T, R, F>(items: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel && items.len() > 1 {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

/// Maps `f` over `0..n`, preserving order.
pub fn map_range<R, F>(n: usize, parallel: bool, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel && n > 1 {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

/// Runs two closures, concurrently when allowed.
pub fn join<A, B, RA, RB>(parallel: bool, a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return rayon::join(a, b);
    }
    let _ = parallel;
    (a(), b())
}

/// Whether the crate was built with the `parallel` feature.
pub const fn available() -> bool {
    cfg!(feature = "parallel")
}

/// Sets the size of the global thread pool. Has no effect without the
/// `parallel` feature or after the pool was first used.
pub fn set_threads(n: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_preserved_both_ways() {
        let v: Vec<u64> = (0..1000).collect();
        let a = map_collect(&v, true, |x| x * x);
        let b = map_collect(&v, false, |x| x * x);
        assert_eq!(a, b);
        assert_eq!(map_range(5, true, |i| i + 1), vec![1, 2, 3, 4, 5]);
        assert_eq!(join(true, || 1, || 2), (1, 2));
    }
}
