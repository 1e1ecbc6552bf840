//! Reductions whose result does not depend on the number of worker threads.
//!
//! The index range is cut into fixed-size chunks, each chunk is summed
//! sequentially, and the chunk partials are combined by a pairwise tree in
//! index order.

use rayon::prelude::*;

const CHUNK: usize = 4096;

/// Pairwise (cascade) sum of a slice in a fixed order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// `Σ_{i<n} f(i)`, bit-identical for any thread count.
pub fn det_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let partials: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            let mut s = 0.0;
            for i in lo..hi {
                s += f(i);
            }
            s
        })
        .collect();
    pairwise_sum(&partials)
}

/// Several sums over the same index range in one pass.
pub fn det_sum_n<const K: usize, F>(n: usize, f: F) -> [f64; K]
where
    F: Fn(usize) -> [f64; K] + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let partials: Vec<[f64; K]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            let mut s = [0.0; K];
            for i in lo..hi {
                let v = f(i);
                for k in 0..K {
                    s[k] += v[k];
                }
            }
            s
        })
        .collect();
    let mut out = [0.0; K];
    let mut col = vec![0.0; partials.len()];
    for k in 0..K {
        for (c, p) in col.iter_mut().zip(&partials) {
            *c = p[k];
        }
        out[k] = pairwise_sum(&col);
    }
    out
}

/// Deterministic dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    det_sum(a.len(), |i| a[i] * b[i])
}
