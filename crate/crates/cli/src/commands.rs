use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use hitting_core::montecarlo::{bessel_bridge_fk, compare_density_with_bins, DEFAULT_BINS};
use hitting_core::solutions::{self, b2_first, closed_w, closed_w2_terms, closed_w_gamma, kappa};
use hitting_core::transform::{analytic_inputs, bluman_shtelen_w_with, log_phi_xx, potential_v2, TransformOptions};
use hitting_core::verify::{
    check_inequality, check_inequality_slice, check_vanishing_at_origin, default_probes, interior_relative_deviation,
    quadrature_match, residual_backward, residual_forward, MIN_QUADRATURE_TAU,
};
use hitting_core::{
    kernel_n, Boundary, ClosedFormSolution, DiagnosticReport, GammaPoly, GridField, GridSpec, LambdaPoint, MCConfig,
    Potential, ResidualReport, Variant,
};

use crate::config::{parse_range, RunConfig};
use crate::error::CliError;
use crate::output::{read_field, write_field, write_json, Csv};

const DEFAULT_TOL: f64 = 1e-4;
const TRANSFORM_TOL: f64 = 1e-3;
const LOG_PHI_TOL: f64 = 1e-8;
const QUADRATURE_TOL: f64 = 1e-8;
const ZERO_IDENTITY_TOL: f64 = 1e-14;
const TRANSFORM_DEVIATION_TOL: f64 = 1e-6;
const CHECK_LAMBDAS: [f64; 2] = [0.0, 1.5];

pub fn kernels(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let ts = parse_range(cfg.t.as_deref().unwrap_or("1"))?;
    let xs = parse_range(cfg.x.as_deref().unwrap_or("-3:3:0.1"))?;
    let orders = cfg.n.clone().unwrap_or_else(|| vec![0, 1, 2]);

    let mut rows = Vec::with_capacity(ts.len() * xs.len() * orders.len());
    for &t in &ts {
        for &n in &orders {
            for &x in &xs {
                rows.push([t, x, n as f64, kernel_n(n, t, x)?]);
            }
        }
    }
    let mut csv = Csv::create(&out.join("kernels.csv"), "t,x,n,value")?;
    for r in &rows {
        csv.row(r)?;
    }
    csv.finish()
}

pub fn solution(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let b = cfg.boundary()?;
    let s = b.horizon();
    let latest = s - MIN_QUADRATURE_TAU;
    let grid = cfg.grid_or(|| format!("0:{latest}:11,0:3:31"))?;
    if grid.t_min < 0.0 || grid.t_max > latest + 1e-12 {
        return Err(CliError::usage(format!(
            "solution t-grid [{}, {}] must lie within [0, s - {MIN_QUADRATURE_TAU}] = [0, {latest}]",
            grid.t_min, grid.t_max
        )));
    }
    if grid.x_min < 0.0 {
        return Err(CliError::usage("solution x-grid must be non-negative"));
    }
    let sol = ClosedFormSolution::new(b.clone(), cfg.gamma()?, Variant::First);

    let mut csv = Csv::create(&out.join("w.csv"), "t,x,value")?;
    for i in 0..grid.nt {
        for j in 0..grid.nx {
            let (t, x) = (grid.t(i), grid.x(j));
            csv.row(&[t, x, sol.eval(t, x)?])?;
        }
    }
    csv.finish()?;

    let mut csv = Csv::create(&out.join("kappa.csv"), "x,value")?;
    for j in 0..grid.nx {
        let x = grid.x(j);
        csv.row(&[x, kappa(&b, x)?])?;
    }
    csv.finish()
}

#[derive(Serialize)]
struct Check {
    name: String,
    value: f64,
    tolerance: f64,
    passed: bool,
}

#[derive(Default, Serialize)]
struct Checks {
    passed: bool,
    checks: Vec<Check>,
    reports: BTreeMap<String, ResidualReport>,
}

impl Checks {
    fn assert_le(&mut self, name: impl Into<String>, value: f64, tolerance: f64) {
        self.checks.push(Check {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        });
    }

    fn residual(&mut self, name: &str, report: ResidualReport, tolerance: f64) {
        self.assert_le(name, report.max_rel, tolerance);
        self.reports.insert(name.to_string(), report);
    }

    /// Writes the report and turns failed checks into exit code 2.
    fn finish(mut self, path: &Path) -> Result<(), CliError> {
        self.passed = self.checks.iter().all(|c| c.passed);
        write_json(path, &self)?;
        if self.passed {
            return Ok(());
        }
        let failed: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} = {:e} > {:e}", c.name, c.value, c.tolerance))
            .collect();
        Err(CliError::assertion(format!("failed checks: {}", failed.join("; "))))
    }
}

fn lambda_point(l: f64) -> Result<LambdaPoint, CliError> {
    Ok(LambdaPoint::new(l)?)
}

/// Default verification grid: unit spacing 1e-3 in x over [0.05, 3] and
/// `s / 1000` in t over the first half of the horizon.
fn default_verify_grid(s: f64) -> String {
    format!("0:{}:501,0.05:3:2951", 0.5 * s)
}

pub fn verify(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let b = cfg.boundary()?;
    let tol = cfg.tol.unwrap_or(DEFAULT_TOL);
    let v1 = Potential::MovingBoundary(b.clone());

    if let Some(path) = &cfg.field {
        return verify_field(&b, &read_field(path)?, &v1, tol, out);
    }

    let s = b.horizon();
    let grid = cfg.grid_or(|| default_verify_grid(s))?;
    let gamma = cfg.gamma()?;
    let mut checks = Checks::default();
    let mut diagnostics = BTreeMap::new();

    let w = GridField::from_real_fn(grid, |t, x| closed_w(&b, t, x))?;
    checks.residual("closed_w", residual_backward(&w, &v1)?, tol);
    diagnostics.insert("closed_w", inequality_diagnostics(&b, &w, |x| closed_w(&b, 0.0, x))?);

    let wg = GridField::from_real_fn(grid, |t, x| closed_w_gamma(&b, &gamma, t, x))?;
    checks.residual("closed_w_gamma", residual_backward(&wg, &v1)?, tol);
    diagnostics.insert(
        "closed_w_gamma",
        inequality_diagnostics(&b, &wg, |x| closed_w_gamma(&b, &gamma, 0.0, x))?,
    );

    for l in CHECK_LAMBDAS {
        let lp = lambda_point(l)?;
        let phi = GridField::from_complex_fn(grid, |t, x| solutions::phi_lambda(&b, lp, t, x))?;
        checks.residual(
            &format!("phi_lambda[{l}].re"),
            residual_forward(&phi.real_part(), &v1)?,
            tol,
        );
        checks.residual(
            &format!("phi_lambda[{l}].im"),
            residual_forward(&phi.imag_part(), &v1)?,
            tol,
        );
        checks.assert_le(format!("log_phi_xx[{l}]"), log_phi_xx(&phi)?.max_abs(), LOG_PHI_TOL);
    }
    let lp0 = lambda_point(0.0)?;
    let u = GridField::from_complex_fn(grid, |t, x| solutions::u_lambda(&b, lp0, t, x))?;
    checks.residual("u_lambda[0]", residual_backward(&u.real_part(), &v1)?, tol);

    let mut worst_zero = 0.0_f64;
    for i in 0..grid.nt {
        for j in 0..grid.nx {
            let (first, second) = closed_w2_terms(&b, grid.t(i), grid.x(j))?;
            if first != 0.0 {
                worst_zero = worst_zero.max((first - second).abs() / first.abs());
            }
        }
    }
    checks.assert_le("closed_w2_zero_identity", worst_zero, ZERO_IDENTITY_TOL);

    let mut worst_quad = 0.0_f64;
    for (t, x) in quadrature_points(&grid, s) {
        worst_quad = worst_quad.max(quadrature_match(&b, &gamma, t, x)?);
    }
    checks.assert_le("contour_quadrature", worst_quad, QUADRATURE_TOL);

    let origin = closed_w(&b, 0.0, 0.0)?
        .abs()
        .max(closed_w_gamma(&b, &gamma, 0.0, 0.0)?.abs());
    checks.assert_le("w_at_origin", origin, 0.0);
    for (name, g) in [
        ("vanishing_at_origin", GammaPoly::one()),
        ("vanishing_at_origin_gamma", gamma.clone()),
    ] {
        let eval = |t: f64, x: f64| closed_w_gamma(&b, &g, t, x).unwrap_or(f64::NAN);
        let report = check_vanishing_at_origin(eval, 0.0, &default_probes())?;
        checks.assert_le(name, report.violation_count as f64, 0.0);
    }

    transform_loop(&b, &grid, &mut checks)?;

    write_json(&out.join("diagnostics.json"), &diagnostics)?;
    checks.finish(&out.join("residuals.json"))
}

#[derive(Serialize)]
struct InequalityDiagnostics {
    all_t: DiagnosticReport,
    t0: DiagnosticReport,
}

fn inequality_diagnostics<F>(b: &Boundary, w: &GridField, at_zero: F) -> Result<InequalityDiagnostics, CliError>
where
    F: Fn(f64) -> hitting_core::Result<f64>,
{
    let spec = w.spec();
    let xs: Vec<f64> = (0..spec.nx).map(|j| spec.x(j)).collect();
    let vals = xs
        .iter()
        .map(|&x| at_zero(x))
        .collect::<hitting_core::Result<Vec<_>>>()?;
    Ok(InequalityDiagnostics {
        all_t: check_inequality(w, b.horizon())?,
        t0: check_inequality_slice(0.0, &xs, &vals, b.horizon())?,
    })
}

/// A 3 x 3 spread of grid nodes with `s - t` at least the quadrature floor.
fn quadrature_points(grid: &GridSpec, s: f64) -> Vec<(f64, f64)> {
    let rows: Vec<usize> = (0..grid.nt).filter(|&i| s - grid.t(i) >= MIN_QUADRATURE_TAU).collect();
    if rows.is_empty() {
        return Vec::new();
    }
    let pick = |len: usize, k: usize| (len - 1) * k / 2;
    let mut points = Vec::new();
    for a in 0..3 {
        for c in 0..3 {
            let x = grid.x(pick(grid.nx, c));
            if x > 0.0 {
                points.push((grid.t(rows[pick(rows.len(), a)]), x));
            }
        }
    }
    points
}

/// Transform of the analytic `lambda = 0` pair on `[t_min, t_max] x [0, x_max]`.
fn transform_loop(b: &Boundary, grid: &GridSpec, checks: &mut Checks) -> Result<(), CliError> {
    let dx = grid.dx();
    let nx = (grid.x_max / dx).round() as usize + 1;
    let spec = GridSpec::new(grid.t_min, grid.t_max, grid.nt, 0.0, grid.x_max, nx)?.with_odd_nx();
    let lp = lambda_point(0.0)?;
    let (u, phi) = analytic_inputs(b, lp, spec)?;
    let (w, target) = transform_with_target(b, lp, &u, &phi)?;
    checks.assert_le(
        "transform_deviation",
        interior_relative_deviation(&w, &target)?,
        TRANSFORM_DEVIATION_TOL,
    );
    let v2 = Potential::Sampled(potential_v2(&Potential::MovingBoundary(b.clone()), &phi)?);
    checks.residual(
        "transform_residual",
        residual_backward(&w.real_part(), &v2)?,
        TRANSFORM_TOL,
    );
    Ok(())
}

/// Transformed field with `B2` matched to the first lambda solution at
/// `t_min`, and that solution sampled on the same grid.
fn transform_with_target(
    b: &Boundary,
    lp: LambdaPoint,
    u: &GridField,
    phi: &GridField,
) -> Result<(GridField, GridField), CliError> {
    let spec = *u.spec();
    let opts = TransformOptions {
        b2_offset: b2_first(b, lp, spec.t_min)?,
        ..Default::default()
    };
    let w = bluman_shtelen_w_with(u, phi, opts)?;
    let target = GridField::from_complex_fn(spec, |t, x| solutions::w1_lambda(b, lp, t, x))?;
    Ok((w, target))
}

fn verify_field(b: &Boundary, field: &GridField, v1: &Potential, tol: f64, out: &Path) -> Result<(), CliError> {
    let mut checks = Checks::default();
    let report = residual_backward(field, v1)?;
    checks.residual("field", report, tol);
    let diag = check_inequality(&field.real_part(), b.horizon())?;
    write_json(&out.join("diagnostics.json"), &BTreeMap::from([("field", diag)]))?;
    checks.finish(&out.join("residuals.json"))
}

#[derive(Serialize)]
struct TransformSummary {
    lambda: f64,
    analytic: bool,
    nt: usize,
    nx: usize,
    nx_rounded_from: Option<usize>,
    deviation: Option<f64>,
    residual: ResidualReport,
}

pub fn transform(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let b = cfg.boundary()?;
    let l = cfg.lambda.unwrap_or(0.0);
    let lp = lambda_point(l)?;
    let tol = cfg.tol.unwrap_or(TRANSFORM_TOL);

    let (u, phi, analytic) = match (&cfg.u, &cfg.phi) {
        (Some(u), Some(phi)) => (read_field(u)?, read_field(phi)?, false),
        (None, None) => {
            let s = b.horizon();
            let spec = cfg.grid_or(|| format!("0:{}:901,0:3:301", 0.9 * s))?.with_odd_nx();
            let (u, phi) = analytic_inputs(&b, lp, spec)?;
            (u, phi, true)
        }
        _ => return Err(CliError::usage("--u and --phi must be given together")),
    };

    let mut checks = Checks::default();
    let (w, deviation) = if analytic {
        let (w, target) = transform_with_target(&b, lp, &u, &phi)?;
        let dev = interior_relative_deviation(&w, &target)?;
        checks.assert_le("deviation", dev, TRANSFORM_DEVIATION_TOL);
        (w, Some(dev))
    } else {
        (bluman_shtelen_w_with(&u, &phi, TransformOptions::default())?, None)
    };
    let v2 = potential_v2(&Potential::MovingBoundary(b.clone()), &phi)?;
    let residual = residual_backward(&w, &Potential::Sampled(v2.clone()))?;
    checks.residual("residual", residual, tol);

    write_field(&out.join("transform_w.csv"), &w)?;
    write_field(&out.join("v2.csv"), &v2)?;
    let spec = w.spec();
    write_json(
        &out.join("transform.json"),
        &TransformSummary {
            lambda: l,
            analytic,
            nt: spec.nt,
            nx: spec.nx,
            nx_rounded_from: spec.nx_rounded_from,
            deviation,
            residual,
        },
    )?;
    checks.finish(&out.join("transform_checks.json"))
}

fn mc_config(cfg: &RunConfig, paths: usize, steps: usize) -> Result<MCConfig, CliError> {
    let mc = MCConfig::new(
        cfg.paths.unwrap_or(paths),
        cfg.steps.unwrap_or(steps),
        cfg.seed.unwrap_or(0),
    )
    .antithetic(cfg.antithetic.unwrap_or(false));
    mc.validate()?;
    Ok(mc)
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let b = cfg.boundary()?;
    let mc = mc_config(cfg, 100_000, 1000)?;
    let x0 = cfg.x0.unwrap_or(1.0);
    if !(x0 > 0.0) {
        return Err(CliError::usage(format!("--x0 must be positive, got {x0}")));
    }
    let bins = cfg.bins.unwrap_or(DEFAULT_BINS);
    if bins == 0 {
        return Err(CliError::usage("--bins must be at least 1"));
    }

    let cmp = compare_density_with_bins(&b, x0, &mc, bins)?;
    let hist = &cmp.histogram;
    let mut csv = Csv::create(&out.join("fpt_histogram.csv"), "bin_lo,bin_hi,count,empirical")?;
    for ((e, &count), &mass) in hist.bin_edges.windows(2).zip(&hist.counts).zip(&hist.masses) {
        csv.row(&[e[0], e[1], count as f64, mass])?;
    }
    csv.finish()?;

    let mut csv = Csv::create(&out.join("comparison.csv"), "bin_lo,bin_hi,empirical,kappa,reference,z")?;
    for r in &cmp.rows {
        csv.row(&[r.bin_lo, r.bin_hi, r.empirical, r.kappa, r.reference, r.z])?;
    }
    csv.finish()?;

    let fk = bessel_bridge_fk(&b, x0, &mc)?;
    write_json(&out.join("feynman_kac.json"), &fk)
}

pub fn compare(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let b = cfg.boundary()?;
    let mc = mc_config(cfg, 20_000, 500)?;
    let xs = parse_range(cfg.x.as_deref().unwrap_or("0.25:2:0.25"))?;
    let gamma: GammaPoly = cfg.gamma()?;

    let mut csv = Csv::create(&out.join("compare.csv"), "x,closed_w,kappa,fk_mean,fk_std_error,z")?;
    for &x in &xs {
        let w = closed_w_gamma(&b, &gamma, 0.0, x)?;
        let fk = bessel_bridge_fk(&b, x, &mc)?;
        let z = if fk.std_error > 0.0 {
            (fk.mean - w) / fk.std_error
        } else {
            f64::NAN
        };
        csv.row(&[x, w, kappa(&b, x)?, fk.mean, fk.std_error, z])?;
    }
    csv.finish()
}
