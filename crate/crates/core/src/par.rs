//! Data-parallel helpers with a sequential fallback.
//!
//! The parallel path is taken when the `parallel` feature is enabled and the
//! current rayon pool has more than one thread. Outputs are always assembled
//! in index order, so both paths return identical results.

use std::ops::Range;

/// True when work will be spread over more than one thread.
pub fn is_parallel() -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads() > 1
    }
    #[cfg(not(feature = "parallel"))]
    {
        false
    }
}

pub fn workers() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Maps every index of `range` through `f`, with `init` creating per-worker
/// scratch state. Results are returned in index order.
pub fn map_init<S, T, I, F>(range: Range<usize>, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return range.into_par_iter().map_init(&init, |s, i| f(s, i)).collect();
    }
    let mut state = init();
    range.map(|i| f(&mut state, i)).collect()
}

/// Splits `range` into contiguous chunks of at most `chunk` indices and maps
/// each chunk with fresh scratch state. Chunk results are in order.
pub fn map_chunks<S, T, I, F>(range: Range<usize>, chunk: usize, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, Range<usize>) -> T + Sync + Send,
{
    let chunk = chunk.max(1);
    let start = range.start;
    let len = range.len();
    let chunks = len.div_ceil(chunk);
    map_init(0..chunks, init, |s, c| {
        let lo = start + c * chunk;
        let hi = (lo + chunk).min(start + len);
        f(s, lo..hi)
    })
}

/// Runs `f` on a dedicated pool of `threads` workers. Without the `parallel`
/// feature this just calls `f`.
pub fn with_workers<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .expect("failed to build rayon pool");
        pool.install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_parallel_agree() {
        let seq = with_workers(1, || map_init(0..1000, || 0u64, |s, i| {
            *s += 1;
            (i * i) as u64
        }));
        let par = with_workers(3, || map_init(0..1000, || 0u64, |_, i| (i * i) as u64));
        assert_eq!(seq, par);
        let chunks = map_chunks(3..20, 4, || (), |_, r| r.len());
        assert_eq!(chunks, vec![4, 4, 4, 4, 1]);
    }
}
