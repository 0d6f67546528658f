//! Numerical Bluman-Shtelen transform.
//!
//! Given `u` solving the backward equation and `Phi` solving the adjoint
//! equation with the same potential `V1`, the field
//!
//! ```text
//! w(t, x) = ( int_0^x u Phi d xi + B2(t) ) / Phi(t, x)
//! dB2/dt  = ( Phi_x(t, 0) u(t, 0) - Phi(t, 0) u_x(t, 0) ) / 2
//! ```
//!
//! solves the backward equation with `V2 = V1 - d^2/dx^2 log Phi`. The engine
//! works on sampled fields only, so it can be fed analytic or external data.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::boundary::Boundary;
use crate::error::{Error, Result};
use crate::grid::{FieldKind, GridField, GridSpec, Potential};
use crate::quadrature::cumulative_simpson;
use crate::solutions::{self, LambdaPoint};

/// Magnitudes of `Phi` at or below this are treated as zero crossings.
pub const MIN_PHI: f64 = 1e-12;

/// Largest wrapped phase step between neighbouring x nodes that is still
/// unwrapped without ambiguity.
pub const MAX_PHASE_STEP: f64 = PI / 2.0;

/// One-sided stencil for `d/dx` at `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryStencil {
    /// `(-3 f0 + 4 f1 - f2) / 2h`
    SecondOrder,
    /// `(-25 f0 + 48 f1 - 36 f2 + 16 f3 - 3 f4) / 12h`
    #[default]
    FourthOrder,
}

impl BoundaryStencil {
    fn derivative(self, f: &[Complex64], h: f64) -> Complex64 {
        match self {
            BoundaryStencil::SecondOrder => (f[0] * -3.0 + f[1] * 4.0 - f[2]) / (2.0 * h),
            BoundaryStencil::FourthOrder => {
                (f[0] * -25.0 + f[1] * 48.0 - f[2] * 36.0 + f[3] * 16.0 - f[4] * 3.0) / (12.0 * h)
            }
        }
    }
}

/// Options for [`bluman_shtelen_w_with`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TransformOptions {
    /// `B2(t_min)`. Zero reproduces the `B2` that vanishes at `t = 0`; pass
    /// `b2_second(0) - b2_first(0)` for the one vanishing at `t = s`.
    pub b2_offset: Complex64,
    pub stencil: BoundaryStencil,
}

fn check_nonzero(phi: &GridField) -> Result<()> {
    let spec = phi.spec();
    for ((i, j), v) in phi.values().indexed_iter() {
        let m = v.norm();
        if !(m > MIN_PHI) {
            return Err(Error::ZeroPhi {
                t: spec.t(i),
                x: spec.x(j),
                value: m,
            });
        }
    }
    Ok(())
}

fn kind_of(values: &Array2<Complex64>) -> FieldKind {
    if values.iter().all(|v| v.im == 0.0) {
        FieldKind::Real
    } else {
        FieldKind::Complex
    }
}

/// Second x-derivative of `log Phi`, with the phase unwrapped along rows.
///
/// Interior nodes use the central second difference; the two edge columns
/// are extrapolated linearly from their neighbours.
pub fn log_phi_xx(phi: &GridField) -> Result<GridField> {
    check_nonzero(phi)?;
    let spec = *phi.spec();
    let nx = spec.nx;
    let inv_dx2 = 1.0 / (spec.dx() * spec.dx());

    let rows = phi
        .values()
        .axis_iter(Axis(0))
        .into_par_iter()
        .enumerate()
        .map(|(i, row)| -> Result<Array1<Complex64>> {
            let mut log = Vec::with_capacity(nx);
            let mut phase = row[0].arg();
            log.push(Complex64::new(row[0].norm().ln(), phase));
            for j in 1..nx {
                let raw = row[j].arg() - row[j - 1].arg();
                let step = raw - 2.0 * PI * (raw / (2.0 * PI)).round();
                if step.abs() > MAX_PHASE_STEP {
                    return Err(Error::PhaseJump {
                        t: spec.t(i),
                        x: spec.x(j),
                        step,
                    });
                }
                phase += step;
                log.push(Complex64::new(row[j].norm().ln(), phase));
            }
            let mut out = Array1::zeros(nx);
            for j in 1..nx - 1 {
                out[j] = (log[j + 1] - log[j] * 2.0 + log[j - 1]) * inv_dx2;
            }
            out[0] = out[1] * 2.0 - out[2];
            out[nx - 1] = out[nx - 2] * 2.0 - out[nx - 3];
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut values = Array2::zeros((spec.nt, nx));
    for (mut dst, src) in values.axis_iter_mut(Axis(0)).zip(rows) {
        dst.assign(&src);
    }
    let kind = kind_of(&values);
    GridField::from_values(spec, values, kind)
}

/// `V2 = V1 - d^2/dx^2 log Phi` on the grid of `phi`.
pub fn potential_v2(v1: &Potential, phi: &GridField) -> Result<GridField> {
    let spec = *phi.spec();
    let v1 = v1.sample(spec)?;
    let lxx = log_phi_xx(phi)?;
    let values = v1.values() - lxx.values();
    let kind = kind_of(&values);
    GridField::from_values(spec, values, kind)
}

/// Bluman-Shtelen transform with `B2(t_min) = 0` and the default stencil.
pub fn bluman_shtelen_w(u: &GridField, phi: &GridField) -> Result<GridField> {
    bluman_shtelen_w_with(u, phi, TransformOptions::default())
}

/// Bluman-Shtelen transform of sampled `u` and `Phi`.
///
/// The x-integral is a cumulative composite Simpson sum per row (odd `nx`).
/// `B2` is advanced with the classical fourth-order Runge-Kutta step; since
/// its right-hand side depends on `t` only, the stage values at half steps
/// come from cubic interpolation of the slope between grid rows.
pub fn bluman_shtelen_w_with(u: &GridField, phi: &GridField, opts: TransformOptions) -> Result<GridField> {
    let spec = *u.spec();
    if !spec.same_nodes(phi.spec()) {
        return Err(Error::GridMismatch);
    }
    if spec.x_min != 0.0 {
        return Err(Error::InvalidGrid(format!(
            "transform integrates from x = 0, grid starts at {}",
            spec.x_min
        )));
    }
    if spec.nx.is_multiple_of(2) {
        return Err(Error::EvenNodeCount(spec.nx));
    }
    if spec.nt < 4 || spec.nx < 5 {
        return Err(Error::GridTooSmall {
            nt: spec.nt,
            nx: spec.nx,
            min: 5,
        });
    }
    check_nonzero(phi)?;

    let (dt, dx) = (spec.dt(), spec.dx());
    let (uv, pv) = (u.values(), phi.values());

    let slopes: Vec<Complex64> = (0..spec.nt)
        .map(|i| {
            let ur: Vec<Complex64> = (0..5).map(|j| uv[[i, j]]).collect();
            let pr: Vec<Complex64> = (0..5).map(|j| pv[[i, j]]).collect();
            let ux = opts.stencil.derivative(&ur, dx);
            let px = opts.stencil.derivative(&pr, dx);
            (px * ur[0] - pr[0] * ux) * 0.5
        })
        .collect();

    let nt = spec.nt;
    let mut b2 = vec![opts.b2_offset; nt];
    for i in 0..nt - 1 {
        let mid = if i == 0 {
            (slopes[0] * 5.0 + slopes[1] * 15.0 - slopes[2] * 5.0 + slopes[3]) / 16.0
        } else if i == nt - 2 {
            (slopes[i - 2] - slopes[i - 1] * 5.0 + slopes[i] * 15.0 + slopes[i + 1] * 5.0) / 16.0
        } else {
            (-slopes[i - 1] + slopes[i] * 9.0 + slopes[i + 1] * 9.0 - slopes[i + 2]) / 16.0
        };
        b2[i + 1] = b2[i] + (slopes[i] + mid * 4.0 + slopes[i + 1]) * (dt / 6.0);
    }

    let mut values = Array2::zeros((nt, spec.nx));
    values
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut out)| {
            let prod: Vec<Complex64> = (0..spec.nx).map(|j| uv[[i, j]] * pv[[i, j]]).collect();
            let mut integral = vec![Complex64::new(0.0, 0.0); spec.nx];
            cumulative_simpson(&prod, dx, &mut integral);
            for j in 0..spec.nx {
                out[j] = (integral[j] + b2[i]) / pv[[i, j]];
            }
        });
    let kind = kind_of(&values);
    GridField::from_values(spec, values, kind)
}

/// Samples `u_lambda` and `phi_lambda` on `spec`, requiring
/// `|lambda| dx < pi` so the phase of `Phi` is resolved.
pub fn analytic_inputs(b: &Boundary, lp: LambdaPoint, spec: GridSpec) -> Result<(GridField, GridField)> {
    let step = lp.value().abs() * spec.dx();
    if step >= PI {
        return Err(Error::InvalidGrid(format!(
            "|lambda| dx = {step:.3} does not resolve the phase of Phi"
        )));
    }
    let make = |f: fn(&Boundary, LambdaPoint, f64, f64) -> Result<Complex64>| -> Result<GridField> {
        let field = GridField::from_complex_fn(spec, |t, x| f(b, lp, t, x))?;
        if lp.value() == 0.0 {
            Ok(field.real_part())
        } else {
            Ok(field)
        }
    };
    Ok((make(solutions::u_lambda)?, make(solutions::phi_lambda)?))
}
