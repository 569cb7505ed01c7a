//! Deterministic fan-out over index ranges.
//!
//! Work is cut into fixed chunks that do not depend on the worker count, each
//! chunk is folded on its own, and the chunk results are merged in index
//! order. Exact accumulators therefore give identical results for any number
//! of workers.

use std::ops::Range;

/// Splits `0..n` into at most `chunks` contiguous ranges.
pub fn split(n: u64, chunks: u64) -> Vec<Range<u64>> {
    let chunks = chunks.clamp(1, n.max(1));
    let step = n.div_ceil(chunks);
    (0..chunks)
        .map(|i| (i * step).min(n)..((i + 1) * step).min(n))
        .filter(|r| !r.is_empty())
        .collect()
}

/// Runs `work` on every range and merges results left to right.
pub fn map_reduce<T, W, M>(workers: usize, ranges: Vec<Range<u64>>, work: W, mut merge: M) -> Option<T>
where
    T: Send,
    W: Fn(Range<u64>) -> T + Sync + Send,
    M: FnMut(T, T) -> T,
{
    let results = run(workers, ranges, work);
    let mut it = results.into_iter();
    let first = it.next()?;
    Some(it.fold(first, &mut merge))
}

#[cfg(feature = "parallel")]
pub fn run<T, W>(workers: usize, ranges: Vec<Range<u64>>, work: W) -> Vec<T>
where
    T: Send,
    W: Fn(Range<u64>) -> T + Sync + Send,
{
    use rayon::prelude::*;
    if workers <= 1 || ranges.len() <= 1 {
        return ranges.into_iter().map(work).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| ranges.into_par_iter().map(&work).collect()),
        Err(_) => ranges.into_iter().map(work).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn run<T, W>(_workers: usize, ranges: Vec<Range<u64>>, work: W) -> Vec<T>
where
    T: Send,
    W: Fn(Range<u64>) -> T + Sync + Send,
{
    ranges.into_iter().map(work).collect()
}

/// Sensible default worker count.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
