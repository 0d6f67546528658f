//! Closed-form solutions of the backward equation `-w_t + x f''(t) w = w_xx / 2`
//! arising in first-passage problems of Brownian motion to a moving boundary
//! `f`, together with the tools used to check them: heat kernels and their
//! Fourier oracle, a numerical Bluman-Shtelen transform engine, finite
//! difference residuals, and Monte Carlo estimators.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod montecarlo;
pub mod quadrature;
pub mod solutions;
pub mod transform;
pub mod verify;

pub use boundary::Boundary;
pub use error::{Error, Result};
pub use grid::{FieldKind, GridField, GridSpec, Potential};
pub use kernels::{derived_kernel, heat_kernel, kernel_n, KernelId};
pub use montecarlo::{DensityHistogram, MCConfig, MCEstimate};
pub use num_complex::Complex64;
pub use solutions::{ClosedFormSolution, GammaPoly, LambdaPoint, Variant};
pub use verify::{DiagnosticReport, ResidualReport};
