//! Data-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature (on by default) the parallel paths run on
//! rayon's global pool. Without it, [`Execution::Parallel`] silently runs
//! sequentially, so callers never need their own `cfg` switches.
//! Every reduction here is order-independent, so both modes return
//! identical results.

use serde::{Deserialize, Serialize};

/// Submask enumerations at or above this many free items go parallel
/// under [`Execution::Auto`].
pub const PARALLEL_ENUMERATION_MIN_ITEMS: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    Parallel,
    /// Parallel for large enumerations and for trial batches.
    #[default]
    Auto,
}

impl Execution {
    /// True when this build can actually run work in parallel.
    pub const fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }

    #[cfg_attr(not(feature = "parallel"), allow(dead_code))]
    fn enumeration_is_parallel(self, free_items: usize) -> bool {
        match self {
            Execution::Sequential => false,
            Execution::Parallel => Self::parallel_available(),
            Execution::Auto => {
                Self::parallel_available() && free_items >= PARALLEL_ENUMERATION_MIN_ITEMS
            }
        }
    }

    #[cfg_attr(not(feature = "parallel"), allow(dead_code))]
    fn batch_is_parallel(self) -> bool {
        self != Execution::Sequential && Self::parallel_available()
    }
}

/// Maps `f` over `0..n`, returning results in index order.
pub fn map_indexed<T, F>(n: u64, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.batch_is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Scatters the low bits of `index` into the one bits of `outer`.
#[inline]
#[cfg_attr(not(feature = "parallel"), allow(dead_code))]
pub(crate) fn deposit(mut index: u32, mut outer: u32) -> u32 {
    let mut out = 0;
    while outer != 0 {
        let low = outer & outer.wrapping_neg();
        if index & 1 != 0 {
            out |= low;
        }
        index >>= 1;
        outer &= outer - 1;
    }
    out
}

/// Maximum of `score` over every submask of `outer`.
pub(crate) fn max_over_submasks<F>(outer: u32, exec: Execution, score: F) -> f64
where
    F: Fn(u32) -> f64 + Sync + Send,
{
    let free = outer.count_ones() as usize;
    #[cfg(feature = "parallel")]
    if exec.enumeration_is_parallel(free) {
        use rayon::prelude::*;
        return (0..1u64 << free)
            .into_par_iter()
            .map(|k| score(deposit(k as u32, outer)))
            .reduce(|| f64::NEG_INFINITY, f64::max);
    }
    let _ = (exec, free);
    let mut best = f64::NEG_INFINITY;
    let mut sub = 0u32;
    loop {
        best = best.max(score(sub));
        sub = sub.wrapping_sub(outer) & outer;
        if sub == 0 {
            return best;
        }
    }
}

/// Submask of `outer` maximizing `score`; ties go to fewer items, then to
/// the numerically smallest mask. The tie-break is a total order, so the
/// parallel reduction is deterministic.
pub(crate) fn argmax_over_submasks<F>(outer: u32, exec: Execution, score: F) -> (u32, f64)
where
    F: Fn(u32) -> f64 + Sync + Send,
{
    let free = outer.count_ones() as usize;
    #[cfg(feature = "parallel")]
    if exec.enumeration_is_parallel(free) {
        use rayon::prelude::*;
        return (0..1u64 << free)
            .into_par_iter()
            .map(|k| {
                let bits = deposit(k as u32, outer);
                (bits, score(bits))
            })
            .reduce(|| (0, f64::NEG_INFINITY), pick_better);
    }
    let _ = (exec, free);
    let mut best = (0u32, f64::NEG_INFINITY);
    let mut sub = 0u32;
    loop {
        best = pick_better(best, (sub, score(sub)));
        sub = sub.wrapping_sub(outer) & outer;
        if sub == 0 {
            return best;
        }
    }
}

#[inline]
fn pick_better(a: (u32, f64), b: (u32, f64)) -> (u32, f64) {
    use std::cmp::Ordering::*;
    match a.1.partial_cmp(&b.1) {
        Some(Greater) => a,
        Some(Less) => b,
        _ => {
            let ka = (a.0.count_ones(), a.0);
            let kb = (b.0.count_ones(), b.0);
            if ka <= kb {
                a
            } else {
                b
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deposit_enumerates_submasks() {
        let outer = 0b1011_0100;
        let mut all: Vec<u32> = (0..16).map(|k| deposit(k, outer)).collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 16);
        assert!(all.iter().all(|&s| s & !outer == 0));
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let outer = (1 << 16) - 1;
        // Plenty of exact ties: score depends only on a few bits.
        let score = |b: u32| ((b & 0b111).count_ones() as f64) - 0.25 * ((b >> 8) & 1) as f64;
        let seq = argmax_over_submasks(outer, Execution::Sequential, score);
        let par = argmax_over_submasks(outer, Execution::Parallel, score);
        assert_eq!(seq.0, par.0);
        assert_eq!(seq.0, 0b111);
        assert_eq!(
            max_over_submasks(outer, Execution::Sequential, score),
            max_over_submasks(outer, Execution::Parallel, score)
        );
    }

    #[test]
    fn map_indexed_keeps_order() {
        let out = map_indexed(100, Execution::Parallel, |i| i * i);
        assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
    }
}
