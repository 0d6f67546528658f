//! Composite Simpson helpers shared by the kernel oracle, the transform
//! engine and the Monte Carlo comparison tables.

use num_complex::Complex64;

/// Simpson weight multiplier (1, 4, 2, ..., 4, 1) for node `i` of `n`.
#[inline]
pub(crate) fn simpson_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i == n - 1 {
        1.0
    } else if i % 2 == 1 {
        4.0
    } else {
        2.0
    }
}

/// Composite Simpson integral of `f` over `[a, b]` using `intervals`
/// (rounded up to even) subintervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let m = intervals.max(2).next_multiple_of(2);
    let h = (b - a) / m as f64;
    let n = m + 1;
    let sum: f64 = (0..n).map(|i| simpson_weight(i, n) * f(a + i as f64 * h)).sum();
    sum * h / 3.0
}

/// Cumulative integral `int_0^{x_j}` of uniformly sampled values, for an odd
/// sample count.
///
/// Even nodes get the exact composite Simpson sum. Odd node `j` adds the
/// integral of the quadratic through nodes `j-1, j, j+1` over `[x_{j-1}, x_j]`.
pub(crate) fn cumulative_simpson(values: &[Complex64], h: f64, out: &mut [Complex64]) {
    let n = values.len();
    debug_assert!(n % 2 == 1 && n >= 3);
    debug_assert_eq!(out.len(), n);
    out[0] = Complex64::new(0.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut j = 0;
    while j + 2 < n {
        let (f0, f1, f2) = (values[j], values[j + 1], values[j + 2]);
        out[j + 1] = acc + (f0 * 5.0 + f1 * 8.0 - f2) * (h / 12.0);
        acc += (f0 + f1 * 4.0 + f2) * (h / 3.0);
        out[j + 2] = acc;
        j += 2;
    }
}
