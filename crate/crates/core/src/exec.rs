//! Execution strategy for the data-parallel inner loops.
//!
//! Every heavy loop in the toolkit (Monte Carlo trials, GA fitness
//! evaluation, sweep points) maps a pure function over a fixed index range
//! and reduces the results in a fixed order. Parallel and sequential runs
//! therefore produce bit-identical output at any worker count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How to drive an indexed map.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    /// Plain sequential iteration.
    Sequential,
    /// Rayon work-stealing iteration; output order is still index order.
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Exec {
    #[cfg(feature = "parallel")]
    fn default() -> Self {
        Exec::Parallel
    }

    #[cfg(not(feature = "parallel"))]
    fn default() -> Self {
        Exec::Sequential
    }
}

/// Maps `f` over `0..n`, collecting results in index order.
pub fn map_indexed<T, F>(exec: Exec, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Exec::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Exec::Parallel => (0..n).into_par_iter().map(f).collect(),
    }
}

/// Derives an independent sub-seed from a master seed and a tag
/// (splitmix64 finalizer).
pub fn mix_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
