//! Execution-mode plumbing: one switch that routes bulk loops through rayon
//! or a plain sequential fold.
//!
//! The contract for everything in here is *bit-identical results across
//! modes and thread counts*. Parallel reductions therefore never depend on
//! arrival order: maps collect by index, and argmin reductions use a total
//! order on `(score, index)` so ties break toward the smaller index no
//! matter how work was split.

/// How bulk loops (grid scans, sweep cells, verification batches) execute.
///
/// `Parallel` silently degrades to sequential when the crate is built
/// without the `parallel` feature, so callers can always ask for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    Parallel,
}

impl ExecMode {
    /// True when this mode will actually fan out across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecMode::Parallel
    }
}

/// Configure the global worker pool to `threads` threads.
///
/// `None` or `Some(0)` leaves the pool at its default (one worker per
/// core). Calling this more than once is harmless: only the first call can
/// size the global pool, later calls are ignored. Without the `parallel`
/// feature this is a no-op.
pub fn configure_threads(threads: Option<usize>) {
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = threads {
            if n > 0 {
                // Err means the pool already exists, which is fine.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
    }
}

/// Map `f` over `0..n`, collecting results in index order.
pub fn map_indexed<U, F>(mode: ExecMode, n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if mode.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = mode;
    (0..n).map(f).collect()
}

/// Index of the minimum of `score` over `0..n`, ties broken toward the
/// smaller index. NaN scores are treated as +infinity (never win).
///
/// Returns `(index, score)`. `n` must be at least 1.
pub fn argmin_by<F>(mode: ExecMode, n: usize, score: F) -> (usize, f64)
where
    F: Fn(usize) -> f64 + Sync,
{
    assert!(n >= 1, "argmin over an empty range");
    let eval = |i: usize| -> (usize, f64) {
        let s = score(i);
        (i, if s.is_nan() { f64::INFINITY } else { s })
    };
    // Total order: lower score wins, then lower index. Associative and
    // commutative, so any reduction tree gives the same answer.
    let better = |x: (usize, f64), y: (usize, f64)| -> (usize, f64) {
        if y.1 < x.1 || (y.1 == x.1 && y.0 < x.0) {
            y
        } else {
            x
        }
    };
    #[cfg(feature = "parallel")]
    {
        if mode.is_parallel() {
            use rayon::prelude::*;
            return (0..n)
                .into_par_iter()
                .map(eval)
                .reduce_with(better)
                .expect("non-empty range");
        }
    }
    let _ = mode;
    (0..n).map(eval).reduce(better).expect("non-empty range")
}
