//! Data-parallel helpers with a sequential fallback.
//!
//! Per-cell kernels are written row by row. With the `parallel` feature the
//! rows of large grids are distributed over the rayon pool (thread count from
//! `RAYON_NUM_THREADS`); otherwise, or for small grids, the same row closure
//! runs in a plain loop. Reductions always combine per-row partial results in
//! row order, so both paths produce bit-identical output.

/// Grids smaller than this many cells always run sequentially.
pub const PAR_MIN_CELLS: usize = 4096;

/// Execution mode for per-cell loops and enumerations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled; sequential otherwise.
    Parallel,
}

impl Default for Parallelism {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Parallelism::Parallel
        } else {
            Parallelism::Sequential
        }
    }
}

impl Parallelism {
    /// True when work of `cells` cells should actually be split across threads.
    pub fn splits(self, cells: usize) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Parallel && cells >= PAR_MIN_CELLS
    }
}

/// Runs `f(row, row_slice)` for every row of `out`.
pub(crate) fn for_each_row<T, F>(par: Parallelism, out: &mut [T], row_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if par.splits(out.len()) {
        use rayon::prelude::*;
        out.par_chunks_mut(row_len)
            .enumerate()
            .for_each(|(r, row)| f(r, row));
        return;
    }
    let _ = par;
    for (r, row) in out.chunks_mut(row_len).enumerate() {
        f(r, row);
    }
}

/// Sums `f(row)` over `rows` rows, adding the partial sums in row order.
pub(crate) fn sum_rows<F>(par: Parallelism, rows: usize, cells: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_rows(par, rows, cells, f).into_iter().sum()
}

/// Maximum of `f(row)` over rows (NEG_INFINITY when there are no rows).
pub(crate) fn max_rows<F>(par: Parallelism, rows: usize, cells: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_rows(par, rows, cells, f)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

fn map_rows<F>(par: Parallelism, rows: usize, cells: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if par.splits(cells) {
        use rayon::prelude::*;
        return (0..rows).into_par_iter().map(f).collect();
    }
    let _ = (par, cells);
    (0..rows).map(f).collect()
}

/// Minimum over `0..count` of `f(k)` using the total order (value, k).
///
/// Deterministic under any split: ties in value resolve to the smallest `k`.
/// Returns `None` when every candidate was skipped (`f` returned `None`).
pub(crate) fn argmin_indexed<F>(par: Parallelism, count: u64, f: F) -> Option<(f64, u64)>
where
    F: Fn(u64) -> Option<f64> + Sync + Send,
{
    fn better(a: Option<(f64, u64)>, b: Option<(f64, u64)>) -> Option<(f64, u64)> {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some(x), Some(y)) => {
                if x.0 < y.0 || (x.0 == y.0 && x.1 < y.1) {
                    Some(x)
                } else {
                    Some(y)
                }
            }
        }
    }

    #[cfg(feature = "parallel")]
    if par == Parallelism::Parallel && count >= 1024 {
        use rayon::prelude::*;
        return (0..count)
            .into_par_iter()
            .map(|k| f(k).map(|v| (v, k)))
            .reduce(|| None, better);
    }
    let _ = par;
    (0..count).map(|k| f(k).map(|v| (v, k))).fold(None, better)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmin_prefers_smallest_index_on_ties() {
        let vals = [3.0, 1.0, 2.0, 1.0];
        for par in [Parallelism::Sequential, Parallelism::Parallel] {
            let r = argmin_indexed(par, 4, |k| Some(vals[k as usize]));
            assert_eq!(r, Some((1.0, 1)));
        }
        assert_eq!(argmin_indexed(Parallelism::Sequential, 3, |_| None), None);
    }

    #[test]
    fn large_argmin_matches_between_modes() {
        let f = |k: u64| Some(((k * 7919) % 10007) as f64);
        let a = argmin_indexed(Parallelism::Sequential, 50_000, f);
        let b = argmin_indexed(Parallelism::Parallel, 50_000, f);
        assert_eq!(a, b);
    }

    #[test]
    fn row_sums_identical_across_modes() {
        let f = |r: usize| (r as f64).sqrt() * 1e-3;
        let a = sum_rows(Parallelism::Sequential, 200, 1 << 20, f);
        let b = sum_rows(Parallelism::Parallel, 200, 1 << 20, f);
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
