//! Execution-mode plumbing.
//!
//! Hot loops (amplitude fields, per-cube scans, suite corpora) are
//! data-parallel maps with no shared mutable state. With the `parallel`
//! feature (default) they run on rayon; without it, or with
//! [`Parallelism::Sequential`], they run as plain iterators. Results are
//! always collected in index order and reduced sequentially, so sums are
//! reproducible bit-for-bit regardless of thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution mode for the expensive entry points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    /// Use the rayon thread pool when the `parallel` feature is enabled.
    #[default]
    Auto,
    /// Force single-threaded evaluation.
    Sequential,
}

/// Maps `f` over `0..n`, collecting results in index order.
pub fn map_indexed<T, F>(n: usize, mode: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if mode == Parallelism::Auto {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = mode;
    (0..n).map(f).collect()
}

/// Maps `f` over a slice, collecting results in order.
pub fn map_slice<T, U, F>(items: &[T], mode: Parallelism, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if mode == Parallelism::Auto {
            return items.par_iter().map(f).collect();
        }
    }
    let _ = mode;
    items.iter().map(f).collect()
}

/// Left-to-right sum; the fixed association order keeps reductions
/// reproducible across runs and thread counts.
pub fn ordered_sum(values: &[f64]) -> f64 {
    values.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_preserve_order() {
        let a = map_indexed(100, Parallelism::Auto, |i| i * i);
        let b = map_indexed(100, Parallelism::Sequential, |i| i * i);
        assert_eq!(a, b);
        assert_eq!(a[7], 49);
    }
}
