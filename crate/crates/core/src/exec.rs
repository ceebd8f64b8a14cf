//! Chunked map with a rayon backend and a sequential fallback.
//!
//! Results always come back in chunk order, so any reduction over them is
//! independent of the worker count.

/// Applies `work` to every chunk index in `0..chunks`.
///
/// `threads == 1` always runs on the calling thread. Otherwise, with the
/// `parallel` feature, chunks run on rayon: `threads == 0` uses the global
/// pool, any other value a dedicated pool of that size. Without the feature
/// the thread count is ignored.
pub fn map_chunks<T, F>(chunks: usize, threads: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if threads == 1 || chunks <= 1 {
        return sequential(chunks, work);
    }
    parallel(chunks, threads, work)
}

pub fn sequential<T, F>(chunks: usize, work: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..chunks).map(work).collect()
}

#[cfg(feature = "parallel")]
fn parallel<T, F>(chunks: usize, threads: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;

    let run = || (0..chunks).into_par_iter().map(&work).collect();
    if threads == 0 {
        return run();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel<T, F>(chunks: usize, _threads: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    sequential(chunks, work)
}

/// Whether this build can run chunks concurrently.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_for_every_thread_count() {
        let expected: Vec<usize> = (0..257).map(|i| i * i).collect();
        for threads in [0, 1, 2, 4, 8] {
            assert_eq!(map_chunks(257, threads, |i| i * i), expected);
        }
    }
}
