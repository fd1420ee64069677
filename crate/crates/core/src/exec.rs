//! Execution policy for the data-parallel inner loops (candidate scoring,
//! per-band convolution, Monte Carlo trials, per-vector deconvolution).
//!
//! With the `parallel` feature the `Parallel` policy dispatches to rayon;
//! without it every policy runs sequentially. Both paths produce identical
//! results: work items are pure and results are collected in index order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when this policy will actually fan out across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Maps `f` over `0..n`, returning results in index order.
    pub fn map_indices<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Maps `f` over a slice, returning results in order.
    pub fn map_slice<S, T, F>(self, items: &[S], f: F) -> Vec<T>
    where
        S: Sync,
        T: Send,
        F: Fn(&S) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Applies `f` to consecutive mutable chunks of `data`.
    pub fn for_each_chunk_mut<T, F>(self, data: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            data.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i, c));
            return;
        }
        data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }

    /// Folds `0..n` in contiguous blocks and reduces the per-block results.
    /// `reduce` must be associative; block boundaries do not depend on the
    /// policy, so the result is identical either way.
    pub fn fold_blocks<T, F, R>(self, n: u64, block: u64, fold: F, reduce: R) -> Option<T>
    where
        T: Send,
        F: Fn(u64, u64) -> Option<T> + Sync + Send,
        R: Fn(T, T) -> T + Sync + Send,
    {
        let block = block.max(1);
        let nblocks = n.div_ceil(block);
        let run = |b: u64| fold(b * block, ((b + 1) * block).min(n));
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            let parts: Vec<Option<T>> = (0..nblocks).into_par_iter().map(run).collect();
            return parts.into_iter().flatten().reduce(&reduce);
        }
        (0..nblocks).filter_map(run).reduce(reduce)
    }
}
