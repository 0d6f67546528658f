//! Lambda-parameterized solutions of the backward/adjoint pair with potential
//! `x f''(t)`, and their closed forms after integrating out lambda.
//!
//! Notation used throughout:
//!
//! * `A(t, x) = exp{ 1/2 int_t^s f'^2 + x f'(t) }` is the shared prefactor,
//! * `C(t, x) = x - int_0^t f'`,
//! * `X(t, x) = x + int_t^s f'` is the shifted argument of the kernels,
//! * `tau = s - t`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::Boundary;
use crate::error::{Error, Result};
use crate::kernels::{self, heat_kernel_unchecked, hermite_factor, lambda_simpson};

/// Highest Gamma degree; keeps every kernel order within [`kernels::MAX_ORDER`].
pub const MAX_GAMMA_DEGREE: usize = kernels::MAX_ORDER - 1;

/// Smallest `s - t` accepted by the closed forms.
pub const MIN_TIME_TO_HORIZON: f64 = 1e-9;

/// Fourier parameter `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaPoint(f64);

impl LambdaPoint {
    pub fn new(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::InvalidConfig(format!("lambda must be finite, got {lambda}")));
        }
        Ok(Self(lambda))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<LambdaPoint> for f64 {
    fn from(lp: LambdaPoint) -> f64 {
        lp.0
    }
}

/// `Gamma(lambda) = sum_n c_n (-i lambda)^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct GammaPoly {
    coeffs: Vec<f64>,
}

impl GammaPoly {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        let coeffs = if coeffs.is_empty() { vec![1.0] } else { coeffs };
        if coeffs.len() - 1 > MAX_GAMMA_DEGREE {
            return Err(Error::GammaDegreeTooHigh(coeffs.len() - 1));
        }
        Ok(Self { coeffs })
    }

    /// `Gamma = 1`, the base solution.
    pub fn one() -> Self {
        Self { coeffs: vec![1.0] }
    }

    /// `Gamma = -i lambda`.
    pub fn minus_i_lambda() -> Self {
        Self { coeffs: vec![0.0, 1.0] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, lambda: f64) -> Complex64 {
        let z = Complex64::new(0.0, -lambda);
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }
}

impl TryFrom<Vec<f64>> for GammaPoly {
    type Error = Error;

    fn try_from(coeffs: Vec<f64>) -> Result<Self> {
        Self::new(coeffs)
    }
}

impl From<GammaPoly> for Vec<f64> {
    fn from(g: GammaPoly) -> Self {
        g.coeffs
    }
}

impl Default for GammaPoly {
    fn default() -> Self {
        Self::one()
    }
}

fn check_closed_interval(b: &Boundary, t: f64) -> Result<()> {
    let s = b.horizon();
    if (0.0..=s).contains(&t) {
        Ok(())
    } else {
        Err(Error::TimeOutOfRange { t, lo: 0.0, hi: s })
    }
}

fn check_before_horizon(b: &Boundary, t: f64) -> Result<()> {
    let s = b.horizon();
    if t >= 0.0 && s - t >= MIN_TIME_TO_HORIZON {
        Ok(())
    } else {
        Err(Error::TimeOutOfRange {
            t,
            lo: 0.0,
            hi: s - MIN_TIME_TO_HORIZON,
        })
    }
}

/// Adjoint solution
/// `Phi = exp{ 1/2 int_0^t f'^2 - x f'(t) - lambda^2 t / 2 - i lambda (x - int_0^t f') }`.
pub fn phi_lambda(b: &Boundary, lp: LambdaPoint, t: f64, x: f64) -> Result<Complex64> {
    check_closed_interval(b, t)?;
    let lambda = lp.value();
    let re = 0.5 * b.integral_fprime_sq(0.0, t) - x * b.eval_fprime(t) - 0.5 * lambda * lambda * t;
    let im = -lambda * (x - b.integral_fprime(0.0, t));
    Ok(Complex64::new(re, im).exp())
}

/// Backward solution
/// `u = exp{ 1/2 int_t^s f'^2 + x f'(t) } exp{ -lambda^2 (s - t) / 2 + i lambda (x + int_t^s f') }`.
pub fn u_lambda(b: &Boundary, lp: LambdaPoint, t: f64, x: f64) -> Result<Complex64> {
    check_closed_interval(b, t)?;
    let s = b.horizon();
    let lambda = lp.value();
    let re = 0.5 * b.integral_fprime_sq(t, s) + x * b.eval_fprime(t) - 0.5 * lambda * lambda * (s - t);
    let im = lambda * (x + b.integral_fprime(t, s));
    Ok(Complex64::new(re, im).exp())
}

/// `Phi * u`, which does not depend on `(t, x)`.
pub fn product_phi_u(b: &Boundary, lp: LambdaPoint) -> Complex64 {
    let s = b.horizon();
    let lambda = lp.value();
    Complex64::new(
        0.5 * b.integral_fprime_sq(0.0, s) - 0.5 * lambda * lambda * s,
        lambda * b.integral_fprime(0.0, s),
    )
    .exp()
}

/// `B2(t) = -(int_0^t f' + i lambda t) Phi u`, vanishing at `t = 0`.
pub fn b2_first(b: &Boundary, lp: LambdaPoint, t: f64) -> Result<Complex64> {
    check_closed_interval(b, t)?;
    let factor = Complex64::new(b.integral_fprime(0.0, t), lp.value() * t);
    Ok(-factor * product_phi_u(b, lp))
}

/// `B2'(t) = (int_t^s f' + i lambda (s - t)) Phi u`, vanishing at `t = s`.
pub fn b2_second(b: &Boundary, lp: LambdaPoint, t: f64) -> Result<Complex64> {
    check_closed_interval(b, t)?;
    let s = b.horizon();
    let factor = Complex64::new(b.integral_fprime(t, s), lp.value() * (s - t));
    Ok(factor * product_phi_u(b, lp))
}

/// Right-hand side of the `B2` ODE, `-(f'(t) + i lambda) Phi u`.
pub fn b2_slope(b: &Boundary, lp: LambdaPoint, t: f64) -> Complex64 {
    -Complex64::new(b.eval_fprime(t), lp.value()) * product_phi_u(b, lp)
}

/// `w = ((x - int_0^t f') - i lambda t) u`.
pub fn w1_lambda(b: &Boundary, lp: LambdaPoint, t: f64, x: f64) -> Result<Complex64> {
    check_before_horizon(b, t)?;
    let factor = Complex64::new(x - b.integral_fprime(0.0, t), -lp.value() * t);
    Ok(factor * u_lambda(b, lp, t, x)?)
}

/// `w = ((x + int_t^s f') + i lambda (s - t)) u`.
pub fn w2_lambda(b: &Boundary, lp: LambdaPoint, t: f64, x: f64) -> Result<Complex64> {
    check_before_horizon(b, t)?;
    let s = b.horizon();
    let factor = Complex64::new(x + b.integral_fprime(t, s), lp.value() * (s - t));
    Ok(factor * u_lambda(b, lp, t, x)?)
}

/// Lambda-independent pieces `(A, C, X, tau)` at `(t, x)`.
#[derive(Debug, Clone, Copy)]
struct Pieces {
    prefactor: f64,
    shift_c: f64,
    arg: f64,
    tau: f64,
}

fn pieces(b: &Boundary, t: f64, x: f64) -> Pieces {
    let s = b.horizon();
    Pieces {
        prefactor: (0.5 * b.integral_fprime_sq(t, s) + x * b.eval_fprime(t)).exp(),
        shift_c: x - b.integral_fprime(0.0, t),
        arg: x + b.integral_fprime(t, s),
        tau: s - t,
    }
}

/// Prefactor `A(t, x) = exp{ 1/2 int_t^s f'^2 + x f'(t) }`.
pub fn prefactor(b: &Boundary, t: f64, x: f64) -> f64 {
    pieces(b, t, x).prefactor
}

/// Closed-form base solution,
/// `A [ C k(tau, X) + t (X / tau) k(tau, X) ]`.
pub fn closed_w(b: &Boundary, t: f64, x: f64) -> Result<f64> {
    check_before_horizon(b, t)?;
    let p = pieces(b, t, x);
    let k = heat_kernel_unchecked(p.tau, p.arg);
    Ok(p.prefactor * (p.shift_c * k + t * (p.arg / p.tau) * k))
}

/// Closed form of the Gamma-extended family,
/// `A sum_n c_n [ C k_n(tau, X) + t k_{n+1}(tau, X) ]`.
pub fn closed_w_gamma(b: &Boundary, g: &GammaPoly, t: f64, x: f64) -> Result<f64> {
    check_before_horizon(b, t)?;
    if g.degree() > MAX_GAMMA_DEGREE {
        return Err(Error::GammaDegreeTooHigh(g.degree()));
    }
    let p = pieces(b, t, x);
    let k = heat_kernel_unchecked(p.tau, p.arg);
    let mut sum = 0.0;
    for (n, &c) in g.coeffs().iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let g_n = hermite_factor(n, p.tau, p.arg);
        let g_next = hermite_factor(n + 1, p.tau, p.arg);
        sum += c * (p.shift_c * g_n * k + t * g_next * k);
    }
    Ok(p.prefactor * sum)
}

/// The two terms of the second (B2') closed form: `A X k(tau, X)` and the
/// contour integral of the `i lambda (s - t) u` part, `-A tau h(tau, X)`.
pub fn closed_w2_terms(b: &Boundary, t: f64, x: f64) -> Result<(f64, f64)> {
    check_before_horizon(b, t)?;
    let p = pieces(b, t, x);
    let first = p.prefactor * p.arg * heat_kernel_unchecked(p.tau, p.arg);
    let second = p.prefactor * p.tau * kernels::kernel_n(1, p.tau, p.arg)?;
    Ok((first, second))
}

/// Second closed form, the difference of [`closed_w2_terms`]; zero up to
/// cancellation.
pub fn closed_w2(b: &Boundary, t: f64, x: f64) -> Result<f64> {
    let (first, second) = closed_w2_terms(b, t, x)?;
    Ok(first - second)
}

/// Gamma-extended second form, `A sum_n c_n [ X k_n(tau, X) - tau k_{n+1}(tau, X) ]`.
///
/// Only the constant term cancels identically; `X k_n - tau k_{n+1} = n k_{n-1}`
/// for `n >= 1`.
pub fn closed_w2_gamma(b: &Boundary, g: &GammaPoly, t: f64, x: f64) -> Result<f64> {
    check_before_horizon(b, t)?;
    let p = pieces(b, t, x);
    let k = heat_kernel_unchecked(p.tau, p.arg);
    let mut sum = 0.0;
    for (n, &c) in g.coeffs().iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let first = p.arg * hermite_factor(n, p.tau, p.arg) * k;
        let second = p.tau * hermite_factor(n + 1, p.tau, p.arg) * k;
        sum += c * (first - second);
    }
    Ok(p.prefactor * sum)
}

/// Hitting-density approximation `x k(s, x + int_0^s f')`.
pub fn kappa(b: &Boundary, x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::NegativeX(x));
    }
    let s = b.horizon();
    Ok(x * heat_kernel_unchecked(s, x + b.integral_fprime(0.0, s)))
}

/// Lambda truncation `40 / sqrt(tau) + |X| / tau` used for contour quadrature.
pub fn contour_half_width(b: &Boundary, t: f64, x: f64) -> f64 {
    let p = pieces(b, t, x);
    kernels::default_half_width(p.tau, p.arg)
}

/// `(1/2pi) int Gamma(lambda) w1(lambda) d lambda` by Simpson quadrature.
pub fn contour_w1(b: &Boundary, g: &GammaPoly, t: f64, x: f64, nodes: usize) -> Result<Complex64> {
    check_before_horizon(b, t)?;
    let half_width = contour_half_width(b, t, x);
    lambda_simpson(half_width, nodes, |lambda| {
        // lambda is finite by construction
        let lp = LambdaPoint(lambda);
        g.eval(lambda) * w1_lambda(b, lp, t, x).expect("time checked above")
    })
}

/// `(1/2pi) int w2(lambda) d lambda` by Simpson quadrature.
pub fn contour_w2(b: &Boundary, t: f64, x: f64, nodes: usize) -> Result<Complex64> {
    check_before_horizon(b, t)?;
    let half_width = contour_half_width(b, t, x);
    lambda_simpson(half_width, nodes, |lambda| {
        w2_lambda(b, LambdaPoint(lambda), t, x).expect("time checked above")
    })
}

/// Which `B2` normalization produced the solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    First,
    Second,
}

/// A closed-form solution of the backward equation selected by boundary,
/// Gamma and `B2` variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormSolution {
    pub boundary: Boundary,
    pub gamma: GammaPoly,
    pub variant: Variant,
}

impl ClosedFormSolution {
    pub fn new(boundary: Boundary, gamma: GammaPoly, variant: Variant) -> Self {
        Self {
            boundary,
            gamma,
            variant,
        }
    }

    pub fn eval(&self, t: f64, x: f64) -> Result<f64> {
        match self.variant {
            Variant::First => closed_w_gamma(&self.boundary, &self.gamma, t, x),
            Variant::Second => closed_w2_gamma(&self.boundary, &self.gamma, t, x),
        }
    }

    pub fn prefactor(&self, t: f64, x: f64) -> f64 {
        prefactor(&self.boundary, t, x)
    }
}
