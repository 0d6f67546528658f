//! Heat source kernel `k`, derived kernel `h`, and the Hermite-derivative
//! family `(-d/dx)^n k` that the Gamma-extended solutions are built from.
//!
//! The family is the inverse Fourier transform of `(-i lambda)^n` against the
//! Gaussian `exp(-lambda^2 t / 2)`; [`fourier_quadrature_oracle`] evaluates
//! that integral directly and serves as an independent check on the
//! recurrence in [`kernel_n`].

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::simpson_weight;

/// Highest kernel order supported by [`kernel_n`].
pub const MAX_ORDER: usize = 12;

/// Default Simpson node count for the Fourier oracle.
pub const DEFAULT_NODES: usize = 16_001;

/// Order of a kernel in the derived family: 0 is `k`, 1 is `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KernelId(usize);

impl KernelId {
    pub fn new(order: usize) -> Result<Self> {
        if order > MAX_ORDER {
            return Err(Error::OrderTooHigh(order));
        }
        Ok(Self(order))
    }

    pub fn order(self) -> usize {
        self.0
    }

    pub fn eval(self, t: f64, x: f64) -> Result<f64> {
        kernel_n(self.0, t, x)
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveTime(t))
    }
}

#[inline]
pub(crate) fn heat_kernel_unchecked(t: f64, x: f64) -> f64 {
    (-x * x / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

/// Hermite factor `g_n(t, x)` with `kernel_n = g_n * k`.
#[inline]
pub(crate) fn hermite_factor(n: usize, t: f64, x: f64) -> f64 {
    let y = x / t;
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = y;
    for m in 1..n {
        let next = y * cur - (m as f64 / t) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Heat source kernel `k(t, x) = (2 pi t)^{-1/2} exp(-x^2 / 2t)`.
pub fn heat_kernel(t: f64, x: f64) -> Result<f64> {
    check_time(t)?;
    Ok(heat_kernel_unchecked(t, x))
}

/// Derived heat source kernel `h(t, x) = (x / t) k(t, x)`, the first-passage
/// density of standard Brownian motion to the fixed level `x`.
pub fn derived_kernel(t: f64, x: f64) -> Result<f64> {
    check_time(t)?;
    Ok((x / t) * heat_kernel_unchecked(t, x))
}

/// `(-d/dx)^n k(t, x)`, via `g_0 = 1`, `g_1 = x/t`,
/// `g_{n+1} = (x/t) g_n - (n/t) g_{n-1}`.
pub fn kernel_n(n: usize, t: f64, x: f64) -> Result<f64> {
    check_time(t)?;
    if n > MAX_ORDER {
        return Err(Error::OrderTooHigh(n));
    }
    Ok(hermite_factor(n, t, x) * heat_kernel_unchecked(t, x))
}

/// Truncation half-width `40 / sqrt(t) + |x| / t` used by the oracle.
pub fn default_half_width(t: f64, x: f64) -> f64 {
    40.0 / t.sqrt() + x.abs() / t
}

/// `(-i)^n` as a complex unit.
#[inline]
pub(crate) fn minus_i_pow(n: usize) -> Complex64 {
    match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// Composite Simpson over a symmetric lambda grid, `(1/2pi) int_{-L}^{L} g(lambda) d lambda`.
///
/// Nodes are paired as `(lambda, -lambda)` before accumulation.
pub(crate) fn lambda_simpson<F>(half_width: f64, nodes: usize, g: F) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    if nodes < 3 || nodes.is_multiple_of(2) {
        return Err(Error::BadNodeCount(nodes));
    }
    let m = (nodes - 1) / 2;
    let h = half_width / m as f64;
    let mut sum = g(0.0) * simpson_weight(m, nodes);
    for j in 1..=m {
        let lambda = j as f64 * h;
        let w = simpson_weight(m + j, nodes);
        sum += (g(lambda) + g(-lambda)) * w;
    }
    Ok(sum * (h / 3.0) / (2.0 * PI))
}

/// Direct Simpson quadrature of `(1/2pi) int (-i lambda)^n exp(-lambda^2 t/2 + i lambda x) d lambda`
/// over `[-L, L]`.
///
/// Returns the real part; an imaginary part above `1e-12` (relative to the
/// integrand scale) is reported as an error.
pub fn fourier_quadrature_oracle(n: usize, t: f64, x: f64, half_width: f64, nodes: usize) -> Result<f64> {
    check_time(t)?;
    let unit = minus_i_pow(n);
    let integrand = |lambda: f64| {
        let (sin, cos) = (lambda * x).sin_cos();
        unit * Complex64::new(cos, sin) * (lambda.powi(n as i32) * (-0.5 * lambda * lambda * t).exp())
    };
    let value = lambda_simpson(half_width, nodes, integrand)?;
    // scale of the absolute integrand, (1/2pi) int |lambda|^n exp(-lambda^2 t/2)
    let scale = 1.0 + kernel_n(0, t, 0.0)? * t.powf(-(n as f64) / 2.0) * double_factorial_bound(n);
    if value.im.abs() > 1e-12 * scale {
        return Err(Error::ImaginaryResidue(value.im));
    }
    Ok(value.re)
}

/// Oracle with the default truncation and node count.
pub fn fourier_quadrature_default(n: usize, t: f64, x: f64) -> Result<f64> {
    fourier_quadrature_oracle(n, t, x, default_half_width(t, x), DEFAULT_NODES)
}

// E|Z|^n <= (n-1)!! * sqrt(2/pi) bound, rounded up; only sets a tolerance scale
fn double_factorial_bound(n: usize) -> f64 {
    (1..=n.max(1))
        .rev()
        .step_by(2)
        .map(|k| k as f64)
        .product::<f64>()
        .max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_kernel_values() {
        assert_eq!(heat_kernel(1.0, 0.0).unwrap(), 0.3989422804014327);
        // frozen from the Fourier oracle (Simpson, |lambda| <= 60, 10^5 + 1 nodes)
        let oracle = fourier_quadrature_oracle(0, 0.5, 1.5, 60.0, 100_001).unwrap();
        assert!((oracle - 0.059_465_144_611_676).abs() < 1e-12, "{oracle}");
        assert!((heat_kernel(0.5, 1.5).unwrap() - oracle).abs() < 1e-12);
        assert!(matches!(heat_kernel(-1.0, 0.0), Err(Error::NonPositiveTime(_))));
        assert!(heat_kernel(0.0, 0.0).is_err());
    }

    #[test]
    fn derived_kernel_values() {
        assert_eq!(derived_kernel(1.0, 0.0).unwrap(), 0.0);
        assert!((derived_kernel(1.0, 1.0).unwrap() - 0.24197072451914337).abs() < 1e-16);
        let expected = (0.5 / 0.25) * heat_kernel(0.25, 0.5).unwrap();
        assert_eq!(derived_kernel(0.25, 0.5).unwrap(), expected);
        let oracle = fourier_quadrature_default(1, 0.25, 0.5).unwrap();
        assert!((oracle - expected).abs() < 1e-10);
        assert!(derived_kernel(0.0, 1.0).is_err());
    }

    #[test]
    fn low_orders_match_named_kernels() {
        for &(t, x) in &[(1.0, 1.0), (0.3, -0.7), (2.0, 2.5)] {
            assert_eq!(kernel_n(0, t, x).unwrap(), heat_kernel(t, x).unwrap());
            assert_eq!(kernel_n(1, t, x).unwrap(), derived_kernel(t, x).unwrap());
            let k = heat_kernel(t, x).unwrap();
            let second = (x * x / (t * t) - 1.0 / t) * k;
            assert!((kernel_n(2, t, x).unwrap() - second).abs() < 1e-15 * (1.0 + second.abs()));
        }
        assert!((kernel_n(2, 1.0, 0.0).unwrap() + 0.3989422804014327).abs() < 1e-16);
        assert!(matches!(kernel_n(13, 1.0, 0.0), Err(Error::OrderTooHigh(13))));
        assert!(KernelId::new(13).is_err());
        assert_eq!(
            KernelId::new(2).unwrap().eval(1.0, 0.0).unwrap(),
            kernel_n(2, 1.0, 0.0).unwrap()
        );
    }

    #[test]
    fn oracle_agrees_with_closed_forms() {
        let v = fourier_quadrature_oracle(0, 1.0, 0.0, 40.0, 16_001).unwrap();
        assert!((v - heat_kernel(1.0, 0.0).unwrap()).abs() <= 1e-10);
        let v = fourier_quadrature_oracle(1, 1.0, 1.0, 41.0, 16_001).unwrap();
        assert!((v - derived_kernel(1.0, 1.0).unwrap()).abs() <= 1e-10);
        let v = fourier_quadrature_oracle(2, 1.0, 0.0, 40.0, 16_001).unwrap();
        assert!((v - kernel_n(2, 1.0, 0.0).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn oracle_rejects_bad_inputs() {
        assert!(matches!(
            fourier_quadrature_oracle(0, 1.0, 0.0, 40.0, 16_000),
            Err(Error::BadNodeCount(16_000))
        ));
        assert!(matches!(
            fourier_quadrature_oracle(0, 1.0, 0.0, 40.0, 1),
            Err(Error::BadNodeCount(1))
        ));
        assert!(fourier_quadrature_oracle(0, 0.0, 0.0, 40.0, 101).is_err());
    }

    #[test]
    fn recurrence_matches_oracle_across_orders() {
        for n in 0..=8 {
            for &t in &[0.1, 0.5, 1.0, 2.0] {
                for i in 0..25 {
                    let x = -3.0 + 6.0 * i as f64 / 24.0;
                    let closed = kernel_n(n, t, x).unwrap();
                    let oracle = fourier_quadrature_default(n, t, x).unwrap();
                    assert!(
                        (closed - oracle).abs() <= 1e-9 * (1.0 + closed.abs()),
                        "n={n} t={t} x={x}: {closed} vs {oracle}"
                    );
                }
            }
        }
    }

    #[test]
    fn parity_is_exact() {
        for n in 0..=MAX_ORDER {
            for &(t, x) in &[(0.1, 0.37), (1.0, 2.2), (3.0, 0.01)] {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                assert_eq!(kernel_n(n, t, -x).unwrap(), sign * kernel_n(n, t, x).unwrap());
            }
        }
    }

    #[test]
    fn heat_kernel_is_normalized() {
        for &t in &[0.05, 0.5, 1.0, 4.0] {
            let r = 10.0 * f64::sqrt(t);
            let mass = crate::quadrature::simpson(|x| heat_kernel_unchecked(t, x), -r, r, 4000);
            assert!((mass - 1.0).abs() < 1e-10, "t={t}: {mass}");
        }
    }
}
