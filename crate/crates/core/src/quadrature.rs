//! Quadrature rules on uniformly sampled data.

/// Composite Simpson rule for samples on a uniform grid with spacing `h`.
///
/// An even number of samples (odd number of intervals) falls back to
/// Simpson on all but the last interval plus a trapezoid on the last one.
pub fn simpson(samples: &[f64], h: f64) -> f64 {
    simpson_weighted(samples.len(), h, |i| samples[i])
}

/// Composite Simpson rule applied to `f(i)`, `i = 0..n`.
pub fn simpson_weighted(n: usize, h: f64, f: impl Fn(usize) -> f64) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (f(0) + f(1)),
        _ => {
            let m = if n % 2 == 1 { n } else { n - 1 };
            let mut acc = f(0) + f(m - 1);
            for i in 1..m - 1 {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i);
            }
            let mut total = acc * h / 3.0;
            if m < n {
                total += 0.5 * h * (f(n - 2) + f(n - 1));
            }
            total
        }
    }
}

/// Simpson weight of node `i` out of `n` (odd) nodes, without the `h/3` factor.
pub(crate) fn simpson_node_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i == n - 1 {
        1.0
    } else if i % 2 == 1 {
        4.0
    } else {
        2.0
    }
}

/// Trapezoid rule for samples on a uniform grid with spacing `h`.
pub fn trapezoid(samples: &[f64], h: f64) -> f64 {
    match samples.len() {
        0 | 1 => 0.0,
        n => h * (samples[1..n - 1].iter().sum::<f64>() + 0.5 * (samples[0] + samples[n - 1])),
    }
}
