//! Small numeric helpers shared across modules.

/// Pairwise (cascade) summation; deterministic and more accurate than a
/// naive left fold for long sums.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Pairwise summation over an iterator without allocating for short inputs.
pub fn pairwise_sum_iter(iter: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = iter.collect();
    pairwise_sum(&xs)
}
