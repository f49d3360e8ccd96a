//! Tiny dispatch shim between rayon and plain iteration.
//!
//! Every data-parallel kernel funnels through [`map_indices`], which keeps
//! results in input order. Callers merge the collected pieces sequentially,
//! so scores are identical whichever backend runs.

#[cfg(feature = "parallel")]
pub(crate) fn map_indices<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indices<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}
