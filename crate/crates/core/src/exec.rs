//! Execution strategy for the data-parallel kernels.
//!
//! Every kernel partitions its *output* so that each element is written by
//! exactly one worker and computed by the same sequence of floating point
//! operations in either mode. Results are therefore bit-identical between
//! [`Execution::Sequential`] and [`Execution::Parallel`], and independent of
//! the rayon thread count.
//!
//! Without the `parallel` feature, `Parallel` silently runs sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How a kernel distributes its independent output elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Fills `out[i] = f(i)`.
    pub fn fill<F>(self, out: &mut [f64], f: F)
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => out.par_iter_mut().enumerate().for_each(|(i, v)| *v = f(i)),
            _ => out.iter_mut().enumerate().for_each(|(i, v)| *v = f(i)),
        }
    }

    /// Calls `f(chunk_index, chunk)` on consecutive chunks of `chunk_len`.
    pub fn for_each_chunk<F>(self, out: &mut [f64], chunk_len: usize, f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => out
                .par_chunks_mut(chunk_len)
                .enumerate()
                .for_each(|(i, c)| f(i, c)),
            _ => out
                .chunks_mut(chunk_len)
                .enumerate()
                .for_each(|(i, c)| f(i, c)),
        }
    }
}
