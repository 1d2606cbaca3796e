//! Deterministic parallel reductions.
//!
//! Float sums are chunked at a fixed size, chunk sums run in parallel, and
//! the partials are folded in index order, so results are identical for any
//! worker count.

use crate::scalar::Scalar;
use rayon::prelude::*;

const CHUNK: usize = 8192;

/// Ordered parallel sum of `f(i)` over `0..len`.
pub fn sum_indexed<T: Scalar, F>(len: usize, f: F) -> T
where
    F: Fn(usize) -> T + Send + Sync,
{
    if len < 2 * CHUNK {
        let mut acc = T::zero();
        for i in 0..len {
            acc += f(i);
        }
        return acc;
    }
    let n_chunks = len.div_ceil(CHUNK);
    let partials: Vec<T> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            let mut acc = T::zero();
            for i in lo..hi {
                acc += f(i);
            }
            acc
        })
        .collect();
    partials.into_iter().fold(T::zero(), |a, b| a + b)
}

/// Ordered parallel sum over an explicit node index list.
pub fn sum_over_nodes<T: Scalar, F>(nodes: &[usize], f: F) -> T
where
    F: Fn(usize) -> T + Send + Sync,
{
    sum_indexed(nodes.len(), |i| f(nodes[i]))
}

/// Parallel max (exactly associative, safe to reduce in any order).
pub fn max_indexed<T: Scalar, F>(len: usize, f: F) -> T
where
    F: Fn(usize) -> T + Send + Sync,
{
    if len < 2 * CHUNK {
        let mut m = T::zero();
        for i in 0..len {
            m = m.max(f(i));
        }
        return m;
    }
    (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            let mut m = T::zero();
            for i in lo..hi {
                m = m.max(f(i));
            }
            m
        })
        .reduce(T::zero, |a, b| a.max(b))
}
