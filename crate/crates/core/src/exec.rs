//! Data-parallel helpers with a sequential fallback.
//!
//! Every helper produces exactly the same output under both modes: work is
//! split per index and each index is computed independently, so there is no
//! reduction whose order could change between runs.

/// How index-parallel loops are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Uses the rayon thread pool when the `rayon` feature is enabled, and
    /// falls back to sequential execution otherwise.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "rayon") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Number of workers the mode runs on.
    pub fn workers(self) -> usize {
        match self {
            #[cfg(feature = "rayon")]
            Execution::Parallel => rayon::current_num_threads(),
            _ => 1,
        }
    }

    /// Evaluates `f(i)` for `i in 0..len` and collects the results in index order.
    pub fn map_range<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "rayon")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..len).into_par_iter().map(f).collect()
            }
            _ => (0..len).map(f).collect(),
        }
    }

    /// Calls `f(index, chunk)` on each `chunk_len`-sized chunk of `data`.
    pub fn for_each_chunk_mut<T, F>(self, data: &mut [T], chunk_len: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        if chunk_len == 0 {
            return;
        }
        match self {
            #[cfg(feature = "rayon")]
            Execution::Parallel => {
                use rayon::prelude::*;
                data.par_chunks_mut(chunk_len).enumerate().for_each(|(i, c)| f(i, c));
            }
            _ => data.chunks_mut(chunk_len).enumerate().for_each(|(i, c)| f(i, c)),
        }
    }

    /// Like [`for_each_chunk_mut`](Self::for_each_chunk_mut), also handing
    /// out the matching element of `extra` to each chunk.
    pub fn for_each_chunk_zip_mut<T, E, F>(self, data: &mut [T], chunk_len: usize, extra: &mut [E], f: F)
    where
        T: Send,
        E: Send,
        F: Fn(usize, &mut [T], &mut E) + Sync + Send,
    {
        if chunk_len == 0 {
            return;
        }
        debug_assert_eq!(data.len() / chunk_len, extra.len());
        match self {
            #[cfg(feature = "rayon")]
            Execution::Parallel => {
                use rayon::prelude::*;
                data.par_chunks_mut(chunk_len)
                    .zip(extra.par_iter_mut())
                    .enumerate()
                    .for_each(|(i, (c, e))| f(i, c, e));
            }
            _ => data
                .chunks_mut(chunk_len)
                .zip(extra.iter_mut())
                .enumerate()
                .for_each(|(i, (c, e))| f(i, c, e)),
        }
    }
}

/// Dot product with four independent accumulators.
///
/// The summation order is fixed, so the result only depends on the inputs.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
