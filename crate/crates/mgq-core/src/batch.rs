//! Data-parallel batch helpers. With the `parallel` feature (default) these
//! fan out over rayon; without it they run sequentially with identical
//! semantics. Results always come back in input order, so reductions stay
//! deterministic either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..count`, parallel when enabled.
pub fn map_indexed<U, F>(count: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

/// Always-sequential variant, kept for benchmark comparison.
pub fn map_indexed_seq<U, F>(count: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..count).map(f).collect()
}

/// Map over a slice, parallel when enabled.
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Deterministic sum of a mapped range: the map runs in parallel, the
/// reduction is a serial fold in index order.
pub fn sum_indexed<F>(count: usize, f: F) -> crate::C64
where
    F: Fn(usize) -> crate::C64 + Sync + Send,
{
    map_indexed(count, f)
        .into_iter()
        .fold(crate::C64::new(0.0, 0.0), |a, b| a + b)
}
