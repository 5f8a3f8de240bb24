//! Deterministic map-reduce over slices and index ranges.
//!
//! Floating-point addition is not associative, so a naive `par_iter().sum()`
//! gives results that depend on the worker count. Everything here reduces
//! along a *fixed* binary tree: leaves are contiguous chunks of at most `leaf`
//! items, interior nodes split on the leaf-count midpoint. The tree shape is a
//! function of the input length alone, so the result is bitwise identical
//! whether the tree is walked sequentially or by `rayon::join`, for any
//! worker count, and with the `parallel` feature disabled entirely.

use std::ops::Range;

#[cfg(feature = "parallel")]
fn split<RA, RB, A, B>(a: A, b: B) -> (RA, RB)
where
    RA: Send,
    RB: Send,
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
{
    rayon::join(a, b)
}

#[cfg(not(feature = "parallel"))]
fn split<RA, RB, A, B>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA,
    B: FnOnce() -> RB,
{
    (a(), b())
}

/// Reduce `map` over contiguous chunks of `items`, combining along the fixed
/// tree. `combine` must be associative up to the accepted rounding model (it
/// is only ever applied in one specific order).
///
/// Panics if `items` is empty or `leaf == 0`.
pub fn map_reduce<T, R, M, C>(items: &[T], leaf: usize, map: &M, combine: &C) -> R
where
    T: Sync,
    R: Send,
    M: Fn(&[T]) -> R + Sync,
    C: Fn(R, R) -> R + Sync,
{
    assert!(leaf > 0, "leaf size must be positive");
    assert!(!items.is_empty(), "map_reduce over empty input");
    if items.len() <= leaf {
        return map(items);
    }
    let leaves = items.len().div_ceil(leaf);
    let mid = (leaves / 2) * leaf;
    let (l, r) = items.split_at(mid);
    let (a, b) = split(|| map_reduce(l, leaf, map, combine), || map_reduce(r, leaf, map, combine));
    combine(a, b)
}

/// Index-range variant of [`map_reduce`] for producers that generate their
/// own data per index (e.g. seeded Monte-Carlo substreams).
pub fn map_reduce_range<R, M, C>(range: Range<usize>, leaf: usize, map: &M, combine: &C) -> R
where
    R: Send,
    M: Fn(Range<usize>) -> R + Sync,
    C: Fn(R, R) -> R + Sync,
{
    assert!(leaf > 0, "leaf size must be positive");
    assert!(!range.is_empty(), "map_reduce_range over empty range");
    let len = range.end - range.start;
    if len <= leaf {
        return map(range);
    }
    let leaves = len.div_ceil(leaf);
    let mid = range.start + (leaves / 2) * leaf;
    let (a, b) = split(
        || map_reduce_range(range.start..mid, leaf, map, combine),
        || map_reduce_range(mid..range.end, leaf, map, combine),
    );
    combine(a, b)
}

/// Cap the rayon worker count for this process. Returns `Ok(true)` when a
/// pool was installed, `Ok(false)` when the build runs sequentially anyway
/// (feature `parallel` disabled), and an error if a global pool already
/// exists. Results never depend on this setting; only wall time does.
#[cfg(feature = "parallel")]
pub fn configure_threads(threads: usize) -> std::result::Result<bool, String> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map(|_| true)
        .map_err(|e| e.to_string())
}

#[cfg(not(feature = "parallel"))]
pub fn configure_threads(_threads: usize) -> std::result::Result<bool, String> {
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Reference implementation: same tree, explicitly sequential.
    fn tree_seq(items: &[f64], leaf: usize) -> f64 {
        if items.len() <= leaf {
            return items.iter().sum();
        }
        let leaves = items.len().div_ceil(leaf);
        let mid = (leaves / 2) * leaf;
        tree_seq(&items[..mid], leaf) + tree_seq(&items[mid..], leaf)
    }

    #[test]
    fn integer_sum_matches_closed_form() {
        let items: Vec<u64> = (1..=10_000).collect();
        let s = map_reduce(&items, 64, &|c: &[u64]| c.iter().sum::<u64>(), &|a, b| a + b);
        assert_eq!(s, 10_000 * 10_001 / 2);
    }

    #[test]
    fn float_sum_bitwise_matches_fixed_tree() {
        // Awkward magnitudes so that any reassociation would change the bits.
        let items: Vec<f64> = (0..4097)
            .map(|i| (i as f64 * 0.7391).sin() * 10f64.powi((i % 13) as i32 - 6))
            .collect();
        for leaf in [1, 7, 64, 1000, 5000] {
            let got = map_reduce(&items, leaf, &|c: &[f64]| c.iter().sum::<f64>(), &|a, b| a + b);
            let want = tree_seq(&items, leaf);
            assert_eq!(got.to_bits(), want.to_bits(), "leaf={leaf}");
        }
    }

    #[test]
    fn range_variant_agrees_with_slice_variant() {
        let items: Vec<f64> = (0..513).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let a = map_reduce(&items, 32, &|c: &[f64]| c.iter().sum::<f64>(), &|a, b| a + b);
        let b = map_reduce_range(0..items.len(), 32, &|r| items[r].iter().sum::<f64>(), &|a, b| {
            a + b
        });
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
