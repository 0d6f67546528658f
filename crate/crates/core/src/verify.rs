//! Finite-difference residuals of the backward and adjoint equations, and
//! diagnostics for the bound `0 <= w <= h(s - t, x)` and the vanishing
//! condition at `x = 0`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::boundary::Boundary;
use crate::error::{Error, Result};
use crate::grid::{FieldKind, GridField, GridSpec, Potential};
use crate::kernels::{self, derived_kernel};
use crate::solutions::{self, GammaPoly};

/// Minimum nodes per axis for a residual check.
pub const MIN_RESIDUAL_NODES: usize = 5;

/// Floor on the field magnitude used to normalize residuals.
pub const RELATIVE_FLOOR: f64 = 1e-12;

/// Smallest `s - t` at which [`quadrature_match`] is trusted.
pub const MIN_QUADRATURE_TAU: f64 = 0.05;

/// Extremes of a PDE residual over the interior nodes of a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    pub max_abs: f64,
    /// `max_abs / max(max |w|, 1e-12)`.
    pub max_rel: f64,
    pub t_at_max: f64,
    pub x_at_max: f64,
    pub grid: GridSpec,
}

impl Serialize for ResidualReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("ResidualReport", 8)?;
        st.serialize_field("max_abs", &self.max_abs)?;
        st.serialize_field("max_rel", &self.max_rel)?;
        st.serialize_field("t_at_max", &self.t_at_max)?;
        st.serialize_field("x_at_max", &self.x_at_max)?;
        st.serialize_field("nt", &self.grid.nt)?;
        st.serialize_field("nx", &self.grid.nx)?;
        st.serialize_field("dt", &self.grid.dt())?;
        st.serialize_field("dx", &self.grid.dx())?;
        st.end()
    }
}

/// Outcome of a pointwise diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    #[serde(rename = "violations")]
    pub violation_count: usize,
    pub worst_margin: f64,
    #[serde(rename = "total")]
    pub total_points: usize,
}

impl DiagnosticReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

#[derive(Clone, Copy)]
enum Direction {
    Backward,
    Forward,
}

fn residual(field: &GridField, v: &Potential, dir: Direction) -> Result<ResidualReport> {
    let spec = *field.spec();
    if spec.nt < MIN_RESIDUAL_NODES || spec.nx < MIN_RESIDUAL_NODES {
        return Err(Error::GridTooSmall {
            nt: spec.nt,
            nx: spec.nx,
            min: MIN_RESIDUAL_NODES,
        });
    }
    v.check_grid(&spec)?;
    let (dt, dx) = (spec.dt(), spec.dx());
    let inv_2dt = 1.0 / (2.0 * dt);
    let half_inv_dx2 = 0.5 / (dx * dx);
    let sign = match dir {
        Direction::Backward => -1.0,
        Direction::Forward => 1.0,
    };
    let w = field.values();

    // (value, i, j); ties resolve to the lowest index
    let best = (1..spec.nt - 1)
        .into_par_iter()
        .map(|i| {
            let mut row_best = (0.0f64, i, 1usize);
            for j in 1..spec.nx - 1 {
                let c = w[[i, j]];
                let time = (w[[i + 1, j]] - w[[i - 1, j]]) * inv_2dt;
                let space = (w[[i, j + 1]] - c * 2.0 + w[[i, j - 1]]) * half_inv_dx2;
                let r: Complex64 = time * sign + v.at(&spec, i, j) * c - space;
                let a = r.norm();
                if a > row_best.0 {
                    row_best = (a, i, j);
                }
            }
            row_best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0f64, 1usize, 1usize), |acc, r| if r.0 > acc.0 { r } else { acc });

    let scale = field.max_abs().max(RELATIVE_FLOOR);
    Ok(ResidualReport {
        max_abs: best.0,
        max_rel: best.0 / scale,
        t_at_max: spec.t(best.1),
        x_at_max: spec.x(best.2),
        grid: spec,
    })
}

/// Residual of `-w_t + V w - w_xx / 2` with second-order central differences.
pub fn residual_backward(w: &GridField, v: &Potential) -> Result<ResidualReport> {
    residual(w, v, Direction::Backward)
}

/// Residual of the adjoint equation `Phi_t + V Phi - Phi_xx / 2`.
pub fn residual_forward(phi: &GridField, v: &Potential) -> Result<ResidualReport> {
    residual(phi, v, Direction::Forward)
}

fn inequality_margin(w: f64, t: f64, x: f64, s: f64) -> Result<f64> {
    let bound = derived_kernel(s - t, x)?;
    Ok(w.min(bound - w))
}

fn tally(margins: impl Iterator<Item = f64>) -> DiagnosticReport {
    let mut report = DiagnosticReport {
        violation_count: 0,
        worst_margin: f64::INFINITY,
        total_points: 0,
    };
    for m in margins {
        report.total_points += 1;
        if m < 0.0 {
            report.violation_count += 1;
        }
        report.worst_margin = report.worst_margin.min(m);
    }
    report
}

/// Counts grid nodes violating `0 <= w(t, x) <= h(s - t, x)`.
///
/// Reported, never asserted: the closed forms are not bound to satisfy it.
pub fn check_inequality(w: &GridField, s: f64) -> Result<DiagnosticReport> {
    if w.kind() != FieldKind::Real {
        return Err(Error::ComplexField);
    }
    let spec = w.spec();
    if spec.t_min < 0.0 || spec.t_max >= s {
        return Err(Error::TimeOutOfRange {
            t: if spec.t_min < 0.0 { spec.t_min } else { spec.t_max },
            lo: 0.0,
            hi: s,
        });
    }
    if spec.x_min < 0.0 {
        return Err(Error::NegativeX(spec.x_min));
    }
    let mut margins = Vec::with_capacity(spec.len());
    for i in 0..spec.nt {
        for j in 0..spec.nx {
            margins.push(inequality_margin(w.get(i, j).re, spec.t(i), spec.x(j), s)?);
        }
    }
    Ok(tally(margins.into_iter()))
}

/// [`check_inequality`] on a single time slice `(xs, values)` at time `t`.
pub fn check_inequality_slice(t: f64, xs: &[f64], values: &[f64], s: f64) -> Result<DiagnosticReport> {
    if xs.len() != values.len() {
        return Err(Error::GridMismatch);
    }
    if !(0.0..s).contains(&t) {
        return Err(Error::TimeOutOfRange { t, lo: 0.0, hi: s });
    }
    if let Some(&x) = xs.iter().find(|&&x| x < 0.0) {
        return Err(Error::NegativeX(x));
    }
    let margins = xs
        .iter()
        .zip(values)
        .map(|(&x, &w)| inequality_margin(w, t, x, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(tally(margins.into_iter()))
}

/// Geometric probe check of `w(t, x) -> 0` as `x -> 0`.
///
/// Passes when `|w|` strictly decreases along the probes and the last probe
/// satisfies `|w| <= 2 sigma x`, with `sigma` the largest slope `|w| / x`
/// seen over the first half of the sequence (linear decay). `worst_margin`
/// is the slack in that final bound.
pub fn check_vanishing_at_origin<F>(w_eval: F, t: f64, probes: &[f64]) -> Result<DiagnosticReport>
where
    F: Fn(f64, f64) -> f64,
{
    if probes.len() < 2
        || probes.iter().any(|&x| !(x > 0.0))
        || probes.windows(2).any(|p| p[1] >= p[0])
        || *probes.last().unwrap() > 1e-6
    {
        return Err(Error::InvalidConfig(
            "probes must be positive, strictly decreasing, and reach 1e-6".into(),
        ));
    }
    let mags: Vec<f64> = probes.iter().map(|&x| w_eval(t, x).abs()).collect();
    let mut violations = mags
        .windows(2)
        .filter(|m| !(m[1] < m[0] || (m[0] == 0.0 && m[1] == 0.0)))
        .count();
    let half = probes.len().div_ceil(2);
    let sigma = probes[..half]
        .iter()
        .zip(&mags)
        .map(|(&x, &m)| m / x)
        .fold(0.0, f64::max);
    let last_x = *probes.last().unwrap();
    let margin = 2.0 * sigma * last_x - mags.last().unwrap();
    if !(margin >= 0.0) {
        violations += 1;
    }
    Ok(DiagnosticReport {
        violation_count: violations,
        worst_margin: margin,
        total_points: probes.len(),
    })
}

/// Probes `2^-1, ..., 2^-20`.
pub fn default_probes() -> Vec<f64> {
    (1..=20).map(|k| 0.5f64.powi(k)).collect()
}

/// Relative gap `|closed - quadrature| / (1 + |closed|)` between the
/// Gamma-extended closed form and direct lambda-quadrature of `Gamma w1`.
pub fn quadrature_match(b: &Boundary, g: &GammaPoly, t: f64, x: f64) -> Result<f64> {
    let s = b.horizon();
    if !(t >= 0.0 && s - t >= MIN_QUADRATURE_TAU) {
        return Err(Error::TimeOutOfRange {
            t,
            lo: 0.0,
            hi: s - MIN_QUADRATURE_TAU,
        });
    }
    let closed = solutions::closed_w_gamma(b, g, t, x)?;
    let quad = solutions::contour_w1(b, g, t, x, kernels::DEFAULT_NODES)?;
    Ok((closed - quad.re).abs() / (1.0 + closed.abs()))
}

/// `max |field - target| / max |target|`, the normalization used for whole
/// field comparisons.
pub fn relative_deviation(field: &GridField, target: &GridField) -> Result<f64> {
    Ok(field.max_abs_diff(target)? / target.max_abs().max(RELATIVE_FLOOR))
}

/// Same as [`relative_deviation`] restricted to interior nodes.
pub fn interior_relative_deviation(field: &GridField, target: &GridField) -> Result<f64> {
    if !field.spec().same_nodes(target.spec()) {
        return Err(Error::GridMismatch);
    }
    let spec = field.spec();
    let (a, b) = (field.values(), target.values());
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for i in 1..spec.nt - 1 {
        for j in 1..spec.nx - 1 {
            worst = worst.max((a[[i, j]] - b[[i, j]]).norm());
            scale = scale.max(b[[i, j]].norm());
        }
    }
    Ok(worst / scale.max(RELATIVE_FLOOR))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solutions::{closed_w, closed_w_gamma, phi_lambda, u_lambda, LambdaPoint};
    use proptest::prelude::*;

    fn lin() -> Boundary {
        Boundary::new(vec![0.5, 0.3], 1.0).unwrap()
    }

    fn closed_field(b: &Boundary, spec: GridSpec) -> GridField {
        GridField::from_real_fn(spec, |t, x| closed_w(b, t, x)).unwrap()
    }

    #[test]
    fn zero_fields_have_zero_residual() {
        let spec = GridSpec::new(0.0, 0.5, 6, 0.0, 1.0, 7).unwrap();
        let zero = GridField::zeros(spec);
        let r = residual_backward(&zero, &Potential::MovingBoundary(lin())).unwrap();
        assert_eq!(r.max_abs, 0.0);
        let r = residual_forward(&zero, &Potential::MovingBoundary(lin())).unwrap();
        assert_eq!(r.max_abs, 0.0);
    }

    #[test]
    fn small_grids_are_rejected() {
        let spec = GridSpec::new(0.0, 0.5, 4, 0.0, 1.0, 9).unwrap();
        assert!(matches!(
            residual_backward(&GridField::zeros(spec), &Potential::Zero),
            Err(Error::GridTooSmall { .. })
        ));
    }

    #[test]
    fn backward_solutions_have_small_residuals() {
        let b = lin();
        // kept away from t -> s, where the kernels sharpen
        let spec = GridSpec::new(0.0, 0.6, 241, 0.05, 3.0, 591).unwrap();
        let pot = Potential::MovingBoundary(b.clone());
        let r = residual_backward(&closed_field(&b, spec), &pot).unwrap();
        assert!(r.max_rel <= 1e-3, "{r:?}");
        assert!(r.t_at_max > spec.t_min && r.t_at_max < spec.t_max);
        assert!(r.x_at_max > spec.x_min && r.x_at_max < spec.x_max);

        let u = GridField::from_complex_fn(spec, |t, x| u_lambda(&b, LambdaPoint::new(0.0)?, t, x)).unwrap();
        let r = residual_backward(&u, &pot).unwrap();
        assert!(r.max_rel <= 1e-4, "{r:?}");

        let wp = GammaPoly::minus_i_lambda();
        let field = GridField::from_real_fn(spec, |t, x| closed_w_gamma(&b, &wp, t, x)).unwrap();
        let r = residual_backward(&field, &pot).unwrap();
        assert!(r.max_rel <= 1e-3, "{r:?}");
    }

    #[test]
    fn forward_residual_of_complex_phi() {
        let b = lin();
        let spec = GridSpec::new(0.0, 0.9, 181, 0.05, 3.0, 591).unwrap();
        let pot = Potential::MovingBoundary(b.clone());
        for l in [0.0, 2.0] {
            let phi = GridField::from_complex_fn(spec, |t, x| phi_lambda(&b, LambdaPoint::new(l)?, t, x)).unwrap();
            for part in [phi.real_part(), phi.imag_part()] {
                if part.max_abs() == 0.0 {
                    continue;
                }
                let r = residual_forward(&part, &pot).unwrap();
                assert!(r.max_rel <= 1e-4, "lambda={l}: {r:?}");
            }
            // the adjoint residual of a backward solution is not small
            let u = GridField::from_complex_fn(spec, |t, x| u_lambda(&b, LambdaPoint::new(l)?, t, x)).unwrap();
            assert!(residual_forward(&u, &pot).unwrap().max_rel > 1e-2);
        }
    }

    #[test]
    fn residual_converges_at_second_order() {
        let b = lin();
        let coarse = GridSpec::new(0.0, 0.6, 61, 0.05, 3.0, 119).unwrap();
        let fine = GridSpec::new(0.0, 0.6, 121, 0.05, 3.0, 237).unwrap();
        let pot = Potential::MovingBoundary(b.clone());
        let rc = residual_backward(&closed_field(&b, coarse), &pot).unwrap();
        let rf = residual_backward(&closed_field(&b, fine), &pot).unwrap();
        let ratio = rc.max_abs / rf.max_abs;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn inequality_diagnostic_tracks_the_factor_s() {
        for (s, expect_all) in [(0.5, false), (2.0, true)] {
            let b = Boundary::constant(s).unwrap();
            let xs: Vec<f64> = (0..=40).map(|i| 0.1 * i as f64).collect();
            let vals: Vec<f64> = xs.iter().map(|&x| closed_w(&b, 0.0, x).unwrap()).collect();
            let rep = check_inequality_slice(0.0, &xs, &vals, s).unwrap();
            if expect_all {
                assert_eq!(rep.violation_count, xs.len() - 1);
                assert!(rep.worst_margin < 0.0);
            } else {
                assert_eq!(rep.violation_count, 0);
            }
        }
        let spec = GridSpec::new(0.0, 0.4, 5, 0.0, 2.0, 5).unwrap();
        let rep = check_inequality(&GridField::zeros(spec), 0.5).unwrap();
        assert_eq!((rep.violation_count, rep.total_points), (0, 25));
        let complex = GridField::from_complex_fn(spec, |_, _| Ok(Complex64::new(0.0, 1.0))).unwrap();
        assert!(matches!(check_inequality(&complex, 0.5), Err(Error::ComplexField)));
        assert!(check_inequality(&GridField::zeros(spec), 0.4).is_err());
    }

    proptest! {
        #[test]
        fn inequality_count_is_monotone_in_upward_shifts(
            vals in prop::collection::vec(0.0..2.0f64, 20), c in 0.0..1.0f64,
        ) {
            let xs: Vec<f64> = (0..20).map(|i| 0.15 * i as f64).collect();
            let base = check_inequality_slice(0.1, &xs, &vals, 1.0).unwrap();
            let shifted: Vec<f64> = vals.iter().map(|v| v + c).collect();
            let up = check_inequality_slice(0.1, &xs, &shifted, 1.0).unwrap();
            prop_assert!(up.violation_count >= base.violation_count);
        }
    }

    #[test]
    fn vanishing_probe_check() {
        let b = lin();
        let probes = default_probes();
        let rep = check_vanishing_at_origin(|t, x| closed_w(&b, t, x).unwrap(), 0.0, &probes).unwrap();
        assert!(rep.passed(), "{rep:?}");
        let wp = GammaPoly::minus_i_lambda();
        let rep = check_vanishing_at_origin(|t, x| closed_w_gamma(&b, &wp, t, x).unwrap(), 0.0, &probes).unwrap();
        assert!(rep.passed(), "{rep:?}");
        let rep = check_vanishing_at_origin(|_, _| 1.0, 0.0, &probes).unwrap();
        assert!(!rep.passed());
        let rep = check_vanishing_at_origin(|_, x: f64| x.sqrt(), 0.0, &probes).unwrap();
        assert!(!rep.passed());
        assert!(check_vanishing_at_origin(|_, x| x, 0.0, &[0.5, 0.25]).is_err());
    }

    #[test]
    fn quadrature_match_examples() {
        let unit = Boundary::new(vec![1.0], 1.0).unwrap();
        assert!(quadrature_match(&unit, &GammaPoly::one(), 0.5, 1.0).unwrap() <= 1e-8);
        assert!(quadrature_match(&unit, &GammaPoly::one(), 0.0, 0.0).unwrap() <= 1e-15);
        assert!(quadrature_match(&lin(), &GammaPoly::minus_i_lambda(), 0.3, 0.8).unwrap() <= 1e-8);
        assert!(quadrature_match(&lin(), &GammaPoly::one(), 0.96, 0.8).is_err());
    }

    #[test]
    fn report_json_layout() {
        let spec = GridSpec::new(0.0, 0.5, 6, 0.0, 1.0, 7).unwrap();
        let r = residual_backward(&GridField::zeros(spec), &Potential::Zero).unwrap();
        let v: serde_json::Value = serde_json::to_value(r).unwrap();
        for key in ["max_abs", "max_rel", "t_at_max", "x_at_max", "nt", "nx", "dt", "dx"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let d = DiagnosticReport {
            violation_count: 1,
            worst_margin: -0.5,
            total_points: 3,
        };
        let v: serde_json::Value = serde_json::to_value(d).unwrap();
        assert_eq!(v["violations"], 1);
        assert_eq!(v["total"], 3);
    }
}
