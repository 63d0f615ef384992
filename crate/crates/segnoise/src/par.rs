//! Row-sliced execution helpers.
//!
//! Hot per-pixel kernels are written as independent row tasks. With the
//! `parallel` feature the tasks run on the rayon pool; without it they run
//! on the calling thread. Results are collected in row order and any
//! reduction folds that ordered vector sequentially, so both paths produce
//! bit-identical output.

/// Maps `f` over row indices `0..rows`, collecting results in row order.
#[cfg(feature = "parallel")]
pub fn map_rows<T: Send>(rows: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..rows).into_par_iter().map(f).collect()
}

/// Maps `f` over row indices `0..rows`, collecting results in row order.
#[cfg(not(feature = "parallel"))]
pub fn map_rows<T: Send>(rows: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..rows).map(f).collect()
}

/// Sequential twin of [`map_rows`]; the fallback path and the baseline leg
/// of the benchmark suite.
pub fn map_rows_seq<T>(rows: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..rows).map(f).collect()
}

/// Flattens per-row `Vec` outputs into one row-major buffer.
pub fn concat_rows<T>(per_row: Vec<Vec<T>>) -> Vec<T> {
    let mut out = Vec::with_capacity(per_row.iter().map(Vec::len).sum());
    for row in per_row {
        out.extend(row);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let f = |y: usize| (0..8).map(|x| (x * y) as f64 * 0.1).collect::<Vec<_>>();
        assert_eq!(map_rows(16, f), map_rows_seq(16, f));
    }
}
