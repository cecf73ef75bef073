//! Data-parallel helpers. With the `parallel` feature these fan out over
//! rayon's pool; without it they run sequentially. Results never depend on
//! the worker count: reductions break ties by the lowest index.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Number of workers the helpers may use.
pub fn num_threads() -> usize {
    #[cfg(feature = "parallel")]
    return rayon::current_num_threads();

    #[cfg(not(feature = "parallel"))]
    return 1;
}

/// Runs `f` with the helpers limited to `threads` workers (`0` keeps the
/// default pool).
pub fn with_threads<R, F>(threads: usize, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    if threads > 0 {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            return pool.install(f);
        }
    }
    let _ = threads;
    f()
}

/// `(0..total).map(f).collect()`, order preserved.
pub fn map_collect<T, F>(total: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    return (0..total).into_par_iter().map(f).collect();

    #[cfg(not(feature = "parallel"))]
    return (0..total).map(f).collect();
}

/// Index and value of the largest `f(i)`, lowest index on ties.
/// `total` must be positive.
pub fn max_by_index<F>(total: usize, f: F) -> (usize, f64)
where
    F: Fn(usize) -> f64 + Send + Sync,
{
    max_by_index_with(total, f, |v| *v)
}

/// Like [`max_by_index`] for values ranked by `key`.
pub fn max_by_index_with<T, F, K>(total: usize, f: F, key: K) -> (usize, T)
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
    K: Fn(&T) -> f64 + Send + Sync,
{
    assert!(total > 0, "max over an empty range");
    let better = |a: (usize, T), b: (usize, T)| -> (usize, T) {
        let (ka, kb) = (key(&a.1), key(&b.1));
        // NaN never wins.
        if kb > ka || (kb == ka && b.0 < a.0) || (ka.is_nan() && !kb.is_nan()) {
            b
        } else {
            a
        }
    };

    #[cfg(feature = "parallel")]
    return (0..total)
        .into_par_iter()
        .map(|i| (i, f(i)))
        .reduce_with(better)
        .expect("nonempty");

    #[cfg(not(feature = "parallel"))]
    return (0..total).map(|i| (i, f(i))).reduce(better).expect("nonempty");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_pick_lowest_index() {
        let (i, v) = max_by_index(10, |i| if i % 3 == 1 { 5.0 } else { 1.0 });
        assert_eq!((i, v), (1, 5.0));
    }

    #[test]
    fn order_preserved() {
        assert_eq!(map_collect(5, |i| i * i), vec![0, 1, 4, 9, 16]);
    }
}
