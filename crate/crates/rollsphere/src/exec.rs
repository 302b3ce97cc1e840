//! Index-parallel map helpers.
//!
//! The grid scans and multistart loops are embarrassingly parallel; they go
//! through `map_indexed`, which uses rayon when the `parallel` feature is on
//! and degrades to a plain loop otherwise. `map_indexed_serial` is always
//! sequential so benchmarks can compare both paths in one build.

#[cfg(feature = "parallel")]
pub fn map_indexed<U: Send>(n: usize, f: impl Fn(usize) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<U: Send>(n: usize, f: impl Fn(usize) -> U + Sync + Send) -> Vec<U> {
    map_indexed_serial(n, f)
}

pub fn map_indexed_serial<U: Send>(n: usize, f: impl Fn(usize) -> U + Sync + Send) -> Vec<U> {
    (0..n).map(f).collect()
}
