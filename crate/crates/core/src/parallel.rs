//! Deterministic parallel iteration over analysis sources.
//!
//! Sources are split into fixed-size chunks whose results come back in chunk
//! order, so any reduction performed by the caller sees the same sequence of
//! floating-point additions regardless of worker count.

use rayon::prelude::*;

pub(crate) const CHUNK: usize = 64;
const CHUNKS_PER_BATCH: usize = 64;

/// Maps fixed-size chunks of `sources` in parallel, handing each chunk result to
/// `reduce` in source order. `init` builds one reusable workspace per worker.
pub(crate) fn fold_chunks<W, T, I, F, R>(sources: &[usize], init: I, map: F, mut reduce: R)
where
    I: Fn() -> W + Sync + Send,
    F: Fn(&mut W, &[usize]) -> T + Sync + Send,
    T: Send,
    R: FnMut(T),
{
    for batch in sources.chunks(CHUNK * CHUNKS_PER_BATCH) {
        let results: Vec<T> = batch
            .par_chunks(CHUNK)
            .map_init(&init, |ws, chunk| map(ws, chunk))
            .collect();
        results.into_iter().for_each(&mut reduce);
    }
}
