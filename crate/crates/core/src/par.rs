//! Data-parallel helpers with a sequential fallback.
//!
//! Results are always produced in index order and reduced sequentially, so
//! every estimate is bitwise identical whichever execution mode runs it.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// The mode actually used: `Parallel` degrades to `Sequential` when the
    /// crate is built without the `parallel` feature.
    pub fn effective(self) -> Execution {
        if cfg!(feature = "parallel") {
            self
        } else {
            Execution::Sequential
        }
    }
}

/// `(0..n).map(f)` collected in index order.
pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec.effective() {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Sums `k`-vectors produced over fixed chunks of `0..n`; chunk boundaries do
/// not depend on the worker count.
pub fn chunked_sum<F>(exec: Execution, n: usize, chunk: usize, k: usize, f: F) -> Vec<f64>
where
    F: Fn(std::ops::Range<usize>, &mut [f64]) + Sync + Send,
{
    let chunk = chunk.max(1);
    let n_chunks = n.div_ceil(chunk);
    let parts = map_indexed(exec, n_chunks, |c| {
        let mut acc = vec![0.0; k];
        f(c * chunk..((c + 1) * chunk).min(n), &mut acc);
        acc
    });
    let mut total = vec![0.0; k];
    for p in parts {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}
