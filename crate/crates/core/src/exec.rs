//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) the sweeps in this crate fan out
//! over the global rayon pool and the dense kernels use multi-threaded
//! BLAS-3 paths. Without it every helper here degrades to a plain
//! sequential loop, so results are identical either way and only wall time
//! differs.

/// How independent work items of a sweep are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// `Parallel` when the crate was built with rayon support, otherwise
    /// `Sequential`.
    pub fn available(self) -> Self {
        if cfg!(feature = "parallel") {
            self
        } else {
            Execution::Sequential
        }
    }
}

/// Maps `f` over `items` preserving order.
pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec.available() {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// Maps `f` over `0..n` preserving order.
pub fn map_range<R, F>(exec: Execution, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match exec.available() {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Configures the global thread pool (and the dense-kernel parallelism).
///
/// `threads == 1` forces sequential dense kernels. Calling this after the
/// global pool has been initialized only affects the kernel setting.
pub fn configure_threads(threads: Option<usize>) {
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = threads {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            if n <= 1 {
                faer::set_global_parallelism(faer::Par::Seq);
            } else {
                faer::set_global_parallelism(faer::Par::rayon(n));
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        faer::set_global_parallelism(faer::Par::Seq);
    }
}
