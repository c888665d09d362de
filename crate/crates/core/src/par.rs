//! Realization-level parallelism.
//!
//! With the `parallel` feature (default) batches run on the rayon pool;
//! without it every [`Execution`] runs sequentially. Outputs are identical
//! in both modes: work items are collected in index order and reductions use
//! a fixed pairwise tree.

use crate::quat::Quaternion;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Whether this mode actually uses more than one thread in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `f(0), …, f(count − 1)` collected in order.
pub fn map_indexed<T, F>(count: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..count).into_par_iter().map(f).collect()
        }
        _ => (0..count).map(f).collect(),
    }
}

/// Same as [`map_indexed`] over a slice.
pub fn map_slice<S, T, F>(items: &[S], exec: Execution, f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    map_indexed(items.len(), exec, |i| f(&items[i]))
}

/// Element-wise sum of equal-length rows using a balanced binary tree, so
/// the rounding pattern depends only on the number of rows.
pub fn pairwise_sum(mut rows: Vec<Vec<Quaternion>>) -> Option<Vec<Quaternion>> {
    if rows.is_empty() {
        return None;
    }
    while rows.len() > 1 {
        let mut next = Vec::with_capacity(rows.len().div_ceil(2));
        let mut it = rows.into_iter();
        while let Some(mut left) = it.next() {
            if let Some(right) = it.next() {
                for (l, r) in left.iter_mut().zip(right) {
                    *l += r;
                }
            }
            next.push(left);
        }
        rows = next;
    }
    rows.pop()
}
