//! Symmetric pairwise weight matrices with a zero diagonal.
//!
//! Below a size limit the matrix is materialized once together with the
//! column indices of the nonzero entries of each row, so the compactly
//! supported kernels can skip empty pairs. Above the limit rows are
//! recomputed on demand.

use std::borrow::Cow;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

/// Default largest `n` for which pair matrices are materialized.
pub const DEFAULT_DENSE_LIMIT: usize = 4000;

/// Row loops with at least this many rows run on the rayon pool.
const PARALLEL_MIN_ROWS: usize = 256;

type PairFn = Arc<dyn Fn(usize, usize) -> f64 + Send + Sync>;

enum Store {
    Dense { values: Vec<f64>, nonzero: Vec<Vec<u32>> },
    Lazy(PairFn),
}

pub struct PairMatrix {
    n: usize,
    store: Store,
}

impl fmt::Debug for PairMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PairMatrix")
            .field("n", &self.n)
            .field("dense", &self.is_dense())
            .finish()
    }
}

impl PairMatrix {
    /// Builds the matrix from `weight(i, j)`, evaluated for `i < j` only.
    /// Materializes when `n <= dense_limit`.
    pub fn build<F>(n: usize, dense_limit: usize, weight: F) -> Self
    where
        F: Fn(usize, usize) -> f64 + Send + Sync + 'static,
    {
        if n <= dense_limit {
            Self::dense(n, &weight)
        } else {
            let f = Arc::new(weight);
            PairMatrix {
                n,
                store: Store::Lazy(Arc::new(move |i, j| {
                    if i == j {
                        0.0
                    } else {
                        f(i.min(j), i.max(j))
                    }
                })),
            }
        }
    }

    fn dense<F>(n: usize, weight: &F) -> Self
    where
        F: Fn(usize, usize) -> f64 + Sync,
    {
        let upper: Vec<Vec<f64>> = map_rows(n, |i| ((i + 1)..n).map(|j| weight(i, j)).collect());
        let mut values = vec![0.0; n * n];
        for (i, row) in upper.iter().enumerate() {
            for (off, v) in row.iter().enumerate() {
                let j = i + 1 + off;
                values[i * n + j] = *v;
                values[j * n + i] = *v;
            }
        }
        let nonzero = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| values[i * n + j] != 0.0)
                    .map(|j| j as u32)
                    .collect()
            })
            .collect();
        PairMatrix {
            n,
            store: Store::Dense { values, nonzero },
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.store, Store::Dense { .. })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.store {
            Store::Dense { values, .. } => values[i * self.n + j],
            Store::Lazy(f) => f(i, j),
        }
    }

    /// Row `i` (with `row[i] == 0`).
    pub fn row(&self, i: usize) -> Cow<'_, [f64]> {
        match &self.store {
            Store::Dense { values, .. } => Cow::Borrowed(&values[i * self.n..(i + 1) * self.n]),
            Store::Lazy(f) => Cow::Owned((0..self.n).map(|j| f(i, j)).collect()),
        }
    }

    /// Columns `j` with a nonzero entry in row `i`, increasing.
    pub fn nonzero(&self, i: usize, row: &[f64]) -> Cow<'_, [u32]> {
        match &self.store {
            Store::Dense { nonzero, .. } => Cow::Borrowed(&nonzero[i]),
            Store::Lazy(_) => Cow::Owned(
                row.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, _)| j as u32)
                    .collect(),
            ),
        }
    }

    /// Number of nonzero off-diagonal entries (materialized matrices only).
    pub fn nnz(&self) -> Option<usize> {
        match &self.store {
            Store::Dense { nonzero, .. } => Some(nonzero.iter().map(Vec::len).sum()),
            Store::Lazy(_) => None,
        }
    }
}

/// Evaluates `f` for every row index, in parallel for large `n`. The output
/// is in index order, so downstream reductions do not depend on the number
/// of worker threads.
pub fn map_rows<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if n >= PARALLEL_MIN_ROWS {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weight(i: usize, j: usize) -> f64 {
        if (i + j) % 3 == 0 {
            0.0
        } else {
            (i * 10 + j) as f64
        }
    }

    #[test]
    fn dense_and_lazy_agree() {
        let dense = PairMatrix::build(7, 100, weight);
        let lazy = PairMatrix::build(7, 0, weight);
        assert!(dense.is_dense() && !lazy.is_dense());
        for i in 0..7 {
            assert_eq!(dense.row(i), lazy.row(i));
            let row = dense.row(i);
            assert_eq!(dense.nonzero(i, &row), lazy.nonzero(i, &row));
            assert_eq!(dense.get(i, i), 0.0);
            for j in 0..7 {
                assert_eq!(dense.get(i, j), dense.get(j, i));
            }
        }
    }
}
