//! Indexed map helpers: data-parallel with the `parallel` feature, sequential
//! otherwise.
//!
//! Every parallel site in this crate is an independent-per-index map whose
//! results are collected back in index order, so outputs are bitwise
//! identical across thread counts and across the sequential fallback.
//! Reductions (gradient averaging, error maxima) always happen sequentially
//! over the collected vector.

#[cfg(feature = "parallel")]
pub fn map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_sequential(n, f)
}

/// Always-sequential twin of [`map`]; kept public so benchmarks can compare
/// the two paths in one build.
pub fn map_sequential<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Fallible map; the Ok path is deterministic in index order.
pub fn try_map<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_matches_sequential() {
        let a = map(100, |i| i * i);
        let b = map_sequential(100, |i| i * i);
        assert_eq!(a, b);
    }

    #[test]
    fn try_map_short_circuits() {
        let r: Result<Vec<usize>, &str> = try_map(10, |i| if i == 7 { Err("boom") } else { Ok(i) });
        assert!(r.is_err());
    }
}
